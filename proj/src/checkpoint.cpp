#include <fstream>
#include <map>
#include <sstream>

#include "meshfeat/binary_io.hpp"
#include "meshfeat/errors.hpp"
#include "meshfeat/pipeline.hpp"

namespace meshfeat {

namespace {

constexpr uint32_t kCheckpointVersion = 1;

// Tensor: u8 scalar width (4 or 8), u32 rank, u64 dims[rank], little-endian values.
template <class T>
void write_tensor(std::ostream& out, const T* data, std::initializer_list<uint64_t> dims) {
  io::write_pod<uint8_t>(out, sizeof(T));
  io::write_pod<uint32_t>(out, static_cast<uint32_t>(dims.size()));
  uint64_t n = 1;
  for (uint64_t d : dims) {
    io::write_pod<uint64_t>(out, d);
    n *= d;
  }
  io::write_array<T>(out, std::span<const T>(data, n));
}

template <class T>
std::vector<T> read_tensor(std::istream& in, std::initializer_list<uint64_t> expected) {
  const uint8_t width = io::read_pod<uint8_t>(in);
  const uint32_t rank = io::read_pod<uint32_t>(in);
  if (rank != expected.size()) throw DataError("checkpoint tensor has unexpected rank");
  uint64_t n = 1;
  for (uint64_t want : expected) {
    const uint64_t got = io::read_pod<uint64_t>(in);
    if (got != want) throw DataError("checkpoint tensor has unexpected shape");
    n *= got;
  }
  std::vector<T> values(n);
  if (width == 4) {
    std::vector<float> raw(n);
    io::read_array<float>(in, raw);
    std::copy(raw.begin(), raw.end(), values.begin());
  } else if (width == 8) {
    std::vector<double> raw(n);
    io::read_array<double>(in, raw);
    std::transform(raw.begin(), raw.end(), values.begin(), [](double v) { return static_cast<T>(v); });
  } else {
    throw DataError("checkpoint tensor has unknown scalar width");
  }
  return values;
}

void write_string(std::ostream& out, const std::string& s) {
  io::write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const uint32_t n = io::read_pod<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("unexpected end of binary stream");
  return s;
}

void write_section(std::ostream& out, const char (&tag)[5], const std::string& payload) {
  out.write(tag, 4);
  io::write_pod<uint64_t>(out, payload.size());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

uint8_t activation_code(Activation a) { return static_cast<uint8_t>(a); }

Activation activation_from_code(uint8_t c) {
  if (c > static_cast<uint8_t>(Activation::Identity)) throw DataError("checkpoint has unknown activation");
  return static_cast<Activation>(c);
}

}  // namespace

template <class T>
void save_checkpoint(const TrainState<T>& state, const std::filesystem::path& path) {
  const Model<T>& model = state.model;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("MFC1", 4);
  io::write_pod<uint32_t>(out, kCheckpointVersion);

  write_section(out, "CONF", config_to_json(model.config));
  {
    std::ostringstream s;
    io::write_pod<uint64_t>(s, model.hierarchy->hash());
    write_section(out, "HASH", s.str());
  }
  {
    std::ostringstream s;
    write_hierarchy(*model.hierarchy, s);
    write_section(out, "HIER", s.str());
  }
  {
    std::ostringstream s;
    const auto& fs = model.features;
    io::write_pod<uint32_t>(s, static_cast<uint32_t>(fs.num_levels()));
    io::write_pod<uint32_t>(s, static_cast<uint32_t>(fs.dim));
    io::write_array<uint8_t>(s, fs.active);
    for (const auto& z : fs.levels) write_tensor(s, z.data(), {uint64_t(z.rows()), uint64_t(z.cols())});
    write_section(out, "FEAT", s.str());
  }
  {
    std::ostringstream s;
    const auto& mlp = model.mlp;
    io::write_pod<uint32_t>(s, static_cast<uint32_t>(mlp.sizes().size()));
    for (int n : mlp.sizes()) io::write_pod<int32_t>(s, n);
    io::write_pod<uint8_t>(s, activation_code(mlp.hidden_activation()));
    io::write_pod<uint8_t>(s, activation_code(mlp.output_activation()));
    for (size_t l = 0; l < mlp.num_layers(); ++l) {
      // Weights are column-major in memory; stored as (cols, rows) of the transpose view.
      write_tensor(s, mlp.weight(l).data(), {uint64_t(mlp.weight(l).cols()), uint64_t(mlp.weight(l).rows())});
      write_tensor(s, mlp.bias(l).data(), {uint64_t(mlp.bias(l).size())});
    }
    write_section(out, "MLPW", s.str());
  }
  {
    std::ostringstream s;
    const auto& adam = state.adam;
    io::write_pod<double>(s, adam.hyper.beta1);
    io::write_pod<double>(s, adam.hyper.beta2);
    io::write_pod<double>(s, adam.hyper.eps);
    io::write_pod<int64_t>(s, adam.step);
    io::write_pod<uint32_t>(s, static_cast<uint32_t>(adam.groups.size()));
    for (const auto& g : adam.groups) {
      write_string(s, g.name);
      io::write_pod<double>(s, g.lr);
      io::write_pod<double>(s, g.weight_decay);
      io::write_pod<uint32_t>(s, static_cast<uint32_t>(g.m.size()));
      for (size_t k = 0; k < g.m.size(); ++k) {
        write_tensor(s, g.m[k].data(), {uint64_t(g.m[k].size())});
        write_tensor(s, g.v[k].data(), {uint64_t(g.v[k].size())});
      }
    }
    write_section(out, "ADAM", s.str());
  }
  {
    std::ostringstream s;
    io::write_pod<uint64_t>(s, state.epoch);
    write_section(out, "EPOC", s.str());
  }
  {
    // The shuffle is counter based: (seed, next epoch) is the whole generator state.
    std::ostringstream s;
    io::write_pod<uint64_t>(s, model.config.seed);
    io::write_pod<uint64_t>(s, state.epoch);
    write_section(out, "RNGS", s.str());
  }
  if (!out) throw DataError("write failed: " + path.string());
}

template <class T>
TrainState<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, "MFC1");
  const uint32_t version = io::read_pod<uint32_t>(in);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version");

  std::map<std::string, std::string> sections;
  while (in.peek() != std::char_traits<char>::eof()) {
    char tag[4];
    in.read(tag, 4);
    const uint64_t len = io::read_pod<uint64_t>(in);
    std::string payload(len, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated checkpoint section");
    sections[std::string(tag, 4)] = std::move(payload);
  }
  for (const char* tag : {"CONF", "HASH", "HIER", "FEAT", "MLPW", "ADAM", "EPOC"}) {
    if (!sections.count(tag)) throw DataError(std::string("checkpoint lacks section ") + tag);
  }

  TrainState<T> state;
  Model<T>& model = state.model;
  model.config = config_from_json(sections["CONF"]);
  {
    std::istringstream s(sections["HIER"]);
    model.hierarchy = std::make_shared<const Hierarchy>(read_hierarchy(s));
  }
  {
    std::istringstream s(sections["HASH"]);
    if (io::read_pod<uint64_t>(s) != model.hierarchy->hash()) {
      throw DataError("checkpoint hierarchy hash mismatch");
    }
  }
  {
    std::istringstream s(sections["FEAT"]);
    const uint32_t levels = io::read_pod<uint32_t>(s);
    const uint32_t dim = io::read_pod<uint32_t>(s);
    if (levels != model.hierarchy->num_levels()) throw DataError("checkpoint feature level count mismatch");
    FeatureSet<T> fs = make_features<T>(model.hierarchy, static_cast<int>(dim));
    io::read_array<uint8_t>(s, fs.active);
    for (uint32_t i = 0; i < levels; ++i) {
      auto& z = fs.levels[i];
      const auto values = read_tensor<T>(s, {uint64_t(z.rows()), uint64_t(z.cols())});
      std::copy(values.begin(), values.end(), z.data());
    }
    model.features = std::move(fs);
  }
  {
    std::istringstream s(sections["MLPW"]);
    const uint32_t n = io::read_pod<uint32_t>(s);
    std::vector<int> sizes(n);
    for (int& v : sizes) v = io::read_pod<int32_t>(s);
    const Activation hidden = activation_from_code(io::read_pod<uint8_t>(s));
    const Activation output = activation_from_code(io::read_pod<uint8_t>(s));
    Mlp<T> mlp(sizes, hidden, output);
    for (size_t l = 0; l < mlp.num_layers(); ++l) {
      auto& w = mlp.mutable_weight(l);
      const auto wv = read_tensor<T>(s, {uint64_t(w.cols()), uint64_t(w.rows())});
      std::copy(wv.begin(), wv.end(), w.data());
      auto& b = mlp.mutable_bias(l);
      const auto bv = read_tensor<T>(s, {uint64_t(b.size())});
      std::copy(bv.begin(), bv.end(), b.data());
    }
    model.mlp = std::move(mlp);
  }
  {
    std::istringstream s(sections["ADAM"]);
    auto& adam = state.adam;
    adam.hyper.beta1 = io::read_pod<double>(s);
    adam.hyper.beta2 = io::read_pod<double>(s);
    adam.hyper.eps = io::read_pod<double>(s);
    adam.step = io::read_pod<int64_t>(s);
    const uint32_t groups = io::read_pod<uint32_t>(s);
    for (uint32_t gi = 0; gi < groups; ++gi) {
      AdamGroup<T> g;
      g.name = read_string(s);
      g.lr = io::read_pod<double>(s);
      g.weight_decay = io::read_pod<double>(s);
      const uint32_t tensors = io::read_pod<uint32_t>(s);
      for (uint32_t k = 0; k < tensors; ++k) {
        // Shapes are self-described; read the rank-1 length from the header.
        const std::streampos mark = s.tellg();
        io::read_pod<uint8_t>(s);
        io::read_pod<uint32_t>(s);
        const uint64_t len = io::read_pod<uint64_t>(s);
        s.seekg(mark);
        g.m.push_back(read_tensor<T>(s, {len}));
        g.v.push_back(read_tensor<T>(s, {len}));
      }
      adam.groups.push_back(std::move(g));
    }
  }
  {
    std::istringstream s(sections["EPOC"]);
    state.epoch = io::read_pod<uint64_t>(s);
  }
  return state;
}

template void save_checkpoint<float>(const TrainState<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const TrainState<double>&, const std::filesystem::path&);
template TrainState<float> load_checkpoint<float>(const std::filesystem::path&);
template TrainState<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace meshfeat
