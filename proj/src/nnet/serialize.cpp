#include "covpred/nnet/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "covpred/error.hpp"

namespace covpred::nnet {
namespace {

static_assert(std::endian::native == std::endian::little, "weight files are little-endian");

constexpr std::uint8_t kVersion = 1;
constexpr std::array<char, 5> kMlpMagic = {'C', 'P', 'M', 'L', 'P'};
constexpr std::array<char, 5> kFusedMagic = {'C', 'P', 'F', 'U', 'S'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated weight file");
  return v;
}

void put_magic(std::ostream& out, const std::array<char, 5>& magic) {
  out.write(magic.data(), magic.size());
  put<std::uint8_t>(out, kVersion);
}

void expect_magic(std::istream& in, const std::array<char, 5>& magic) {
  std::array<char, 5> got{};
  if (!in.read(got.data(), got.size()) || got != magic) throw IoError("bad weight file magic");
  const auto version = get<std::uint8_t>(in);
  if (version != kVersion) throw IoError("unsupported weight file version " + std::to_string(version));
}

std::int32_t get_dim(std::istream& in) {
  const auto v = get<std::int32_t>(in);
  if (v < 0 || v > (1 << 24)) throw IoError("implausible dimension in weight file");
  return v;
}

}  // namespace

void write_mlp(std::ostream& out, const Mlp& m) {
  put_magic(out, kMlpMagic);
  const MlpSpec& s = m.spec();
  put<std::int32_t>(out, s.input_dim);
  put<std::int32_t>(out, s.hidden_layers);
  put<std::int32_t>(out, s.hidden_width);
  put<std::int32_t>(out, s.output_dim);
  put<std::int32_t>(out, static_cast<std::int32_t>(s.activation));
  for (const Layer& l : m.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put<double>(out, l.weight(r, c));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) put<double>(out, l.bias(i));
  }
  if (!out) throw IoError("failed writing weights");
}

Mlp read_mlp(std::istream& in) {
  expect_magic(in, kMlpMagic);
  MlpSpec s;
  s.input_dim = get_dim(in);
  s.hidden_layers = get_dim(in);
  s.hidden_width = get_dim(in);
  s.output_dim = get_dim(in);
  const auto act = get<std::int32_t>(in);
  if (act != static_cast<std::int32_t>(Activation::relu)) throw IoError("unknown activation code");
  s.activation = Activation::relu;
  s.validate();
  std::vector<Layer> layers;
  int fan_in = s.input_dim;
  for (int i = 0; i <= s.hidden_layers; ++i) {
    const int fan_out = i == s.hidden_layers ? s.output_dim : s.hidden_width;
    Layer l;
    l.weight.resize(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) l.weight(r, c) = get<double>(in);
    l.bias.resize(fan_out);
    for (int c = 0; c < fan_out; ++c) l.bias(c) = get<double>(in);
    layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return Mlp(s, std::move(layers));
}

void write_fused(std::ostream& out, const FusedNet& net) {
  put_magic(out, kFusedMagic);
  put<std::int32_t>(out, net.input_dim());
  put<std::int32_t>(out, static_cast<std::int32_t>(net.parts().size()));
  for (const FusedPart& p : net.parts()) {
    put<std::int32_t>(out, static_cast<std::int32_t>(p.inputs.size()));
    for (int c : p.inputs) put<std::int32_t>(out, c);
    write_mlp(out, p.net);
  }
}

FusedNet read_fused(std::istream& in) {
  expect_magic(in, kFusedMagic);
  const int input_dim = get_dim(in);
  const int n_parts = get_dim(in);
  std::vector<FusedPart> parts;
  for (int k = 0; k < n_parts; ++k) {
    FusedPart p;
    const int n_cols = get_dim(in);
    for (int i = 0; i < n_cols; ++i) p.inputs.push_back(get_dim(in));
    p.net = read_mlp(in);
    parts.push_back(std::move(p));
  }
  return FusedNet(input_dim, std::move(parts));
}

void save_mlp(const std::filesystem::path& path, const Mlp& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_mlp(out, m);
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_mlp(in);
}

}  // namespace covpred::nnet
