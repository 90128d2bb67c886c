#include "covpred/model.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "covpred/error.hpp"
#include "covpred/geo.hpp"
#include "covpred/nnet/serialize.hpp"
#include "json.hpp"

namespace covpred {

using nlohmann::json;

void ModelConfig::validate() const {
  if (hidden_width < 1 || subnet_hidden_layers < 1 || single_hidden_layers < 1)
    throw InvalidInput("model widths and depths must be at least 1");
}

std::vector<std::vector<int>> variant_part_inputs(Variant v, const FeatureEncoding& enc) {
  const std::vector<int> st = enc.compressed_static_columns();
  auto with_static = [&](std::vector<int> cols) {
    cols.insert(cols.end(), st.begin(), st.end());
    return cols;
  };
  using namespace ccol;
  switch (v) {
    // Parts are ordered (distance slot, frequency slot, gain slot).
    case Variant::proposed: return {{dist}, {freq}, with_static({dth, dtv})};
    case Variant::wrong1: return {{dist}, {dth}, with_static({freq, dtv})};
    case Variant::wrong2: return {{dth}, {freq}, with_static({dist, dtv})};
    case Variant::wrong3: return {{dth}, {dtv}, with_static({dist, freq})};
    case Variant::benchmark2: {
      std::vector<int> all(static_cast<std::size_t>(enc.compressed_width()));
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      return {all};
    }
    case Variant::benchmark3: {
      std::vector<int> all(static_cast<std::size_t>(enc.raw_width()));
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      return {all};
    }
  }
  throw InvalidInput("unknown variant");
}

CoverageModel CoverageModel::build(Variant v, int m_beams, FeatureEncoding enc, std::uint64_t seed,
                                   const ModelConfig& cfg) {
  cfg.validate();
  if (!enc.fitted()) throw StateError("cannot build a model on an unfitted encoding");
  if (enc.m_beams() != m_beams) throw InvalidInput("encoding was fitted for a different beam count");
  CoverageModel m;
  m.variant_ = v;
  m.m_beams_ = m_beams;
  m.config_ = cfg;
  m.encoding_ = std::move(enc);
  const bool single = v == Variant::benchmark2 || v == Variant::benchmark3;
  std::vector<nnet::FusedPart> parts;
  std::uint64_t k = 0;
  for (std::vector<int>& cols : variant_part_inputs(v, m.encoding_)) {
    nnet::MlpSpec spec;
    spec.input_dim = static_cast<int>(cols.size());
    spec.hidden_layers = single ? cfg.single_hidden_layers : cfg.subnet_hidden_layers;
    spec.hidden_width = cfg.hidden_width;
    spec.output_dim = m_beams + 1;
    // Distinct, reproducible stream per part.
    const std::uint64_t part_seed = seed ^ (0x9E3779B97F4A7C15ULL * ++k);
    parts.push_back({nnet::Mlp::init(spec, part_seed), std::move(cols)});
  }
  m.net_ = nnet::FusedNet(m.input_width(), std::move(parts));
  return m;
}

void CoverageModel::set_net(nnet::FusedNet net) {
  if (net.input_dim() != net_.input_dim() || net.output_dim() != net_.output_dim() ||
      net.parts().size() != net_.parts().size())
    throw ShapeError("replacement network does not match the model layout");
  net_ = std::move(net);
}

TargetKind CoverageModel::target_kind() const {
  return variant_ == Variant::benchmark3 ? TargetKind::absolute : TargetKind::relative;
}

int CoverageModel::input_width() const {
  return uses_compressed_features() ? encoding_.compressed_width() : encoding_.raw_width();
}

void CoverageModel::require_ready() const {
  if (!encoding_.fitted()) throw StateError("model encoding has not been fitted");
  if (net_.parts().empty()) throw StateError("model has no network");
}

void CoverageModel::encode(const BsRecord& bs, const SamplePoint& pt, std::span<double> out) const {
  if (uses_compressed_features())
    encoding_.compressed_row(geo::compress(bs, pt), out);
  else {
    // Raw rows never need the bearing, but a coincident point is equally
    // meaningless for every variant.
    geo::bearing_angles(geo::enu_offset(bs.location, pt));
    encoding_.raw_row(bs, pt, out);
  }
}

nnet::TrainingSet CoverageModel::training_set(std::span<const Observation> rows) const {
  require_ready();
  const int width = input_width();
  const int outputs = m_beams_ + 1;
  const auto& scalers = encoding_.target_scalers(target_kind());
  nnet::TrainingSet set;
  set.x.resize(static_cast<Eigen::Index>(rows.size()), width);
  set.y.resize(static_cast<Eigen::Index>(rows.size()), outputs);
  set.mask.resize(static_cast<Eigen::Index>(rows.size()), outputs);
  std::vector<double> buf(static_cast<std::size_t>(width));
  Eigen::Index n = 0;
  for (const Observation& o : rows) {
    const MeasurementSample& s = *o.sample;
    if (s.rsrp.size() != static_cast<std::size_t>(outputs))
      throw ShapeError("sample for " + s.bs_id + " has the wrong beam count");
    try {
      encode(*o.bs, s.point, buf);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    const double offset = target_kind() == TargetKind::relative ? geo::ssb_tx_power(o.bs->power) : 0.0;
    bool any = false;
    for (int j = 0; j < outputs; ++j) {
      const bool seen = s.observed[j];
      any = any || seen;
      set.mask(n, j) = seen ? 1.0 : 0.0;
      set.y(n, j) = seen ? scalers[j].apply(s.rsrp[j] - offset) : 0.0;
    }
    if (!any) continue;
    set.x.row(n) = Eigen::Map<const Eigen::RowVectorXd>(buf.data(), width);
    ++n;
  }
  set.x.conservativeResize(n, width);
  set.y.conservativeResize(n, outputs);
  set.mask.conservativeResize(n, outputs);
  return set;
}

Eigen::VectorXd CoverageModel::forward_fused(const CompressedFeatures& cf) const {
  require_ready();
  if (!uses_compressed_features())
    throw StateError("variant " + std::string(to_string(variant_)) +
                     " does not consume compressed features");
  Eigen::MatrixXd x(1, input_width());
  encoding_.compressed_row(cf, std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
  return net_.forward_rowwise(x).row(0).transpose();
}

Eigen::MatrixXd CoverageModel::destandardize(const Eigen::MatrixXd& z,
                                             std::span<const double> p_t) const {
  const auto& scalers = encoding_.target_scalers(target_kind());
  const bool relative = target_kind() == TargetKind::relative;
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      out(r, j) = scalers[j].invert(z(r, j)) + (relative ? p_t[r] : 0.0);
  return out;
}

std::vector<double> CoverageModel::predict_rsrp(const BsRecord& bs, const SamplePoint& pt) const {
  const Eigen::MatrixXd p = predict_rsrp(bs, std::span<const SamplePoint>(&pt, 1));
  return {p.data(), p.data() + p.size()};
}

Eigen::MatrixXd CoverageModel::predict_rsrp(const BsRecord& bs,
                                            std::span<const SamplePoint> pts) const {
  require_ready();
  const int width = input_width();
  // Row-major staging so each row is a contiguous span.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(
      static_cast<Eigen::Index>(pts.size()), width);
  for (std::size_t r = 0; r < pts.size(); ++r)
    encode(bs, pts[r], std::span<double>(x.row(static_cast<Eigen::Index>(r)).data(),
                                         static_cast<std::size_t>(width)));
  const std::vector<double> p_t(pts.size(), geo::ssb_tx_power(bs.power));
  return destandardize(net_.forward_rowwise(x), p_t);
}

Eigen::MatrixXd CoverageModel::predict_observations(std::span<const Observation> rows,
                                                    bool exact_rows) const {
  require_ready();
  const int width = input_width();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(
      static_cast<Eigen::Index>(rows.size()), width);
  std::vector<double> p_t(rows.size(), 0.0);
  std::vector<bool> valid(rows.size(), true);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = std::span<double>(x.row(static_cast<Eigen::Index>(r)).data(),
                                 static_cast<std::size_t>(width));
    try {
      encode(*rows[r].bs, rows[r].sample->point, row);
      p_t[r] = geo::ssb_tx_power(rows[r].bs->power);
    } catch (const DegenerateGeometry&) {
      std::fill(row.begin(), row.end(), 0.0);
      valid[r] = false;
    }
  }
  Eigen::MatrixXd out = destandardize(exact_rows ? net_.forward_rowwise(x) : net_.forward_batch(x), p_t);
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (!valid[r]) out.row(static_cast<Eigen::Index>(r)).setConstant(std::numeric_limits<double>::quiet_NaN());
  return out;
}

// Bundle: "CPBUN" + u8 version + u32 header length + JSON header + fused net.
namespace {

constexpr std::array<char, 5> kBundleMagic = {'C', 'P', 'B', 'U', 'N'};
constexpr std::uint8_t kBundleVersion = 1;

}  // namespace

void CoverageModel::write(std::ostream& out) const {
  require_ready();
  const json header{{"variant", std::string(to_string(variant_))},
                    {"m_beams", m_beams_},
                    {"hidden_width", config_.hidden_width},
                    {"subnet_hidden_layers", config_.subnet_hidden_layers},
                    {"single_hidden_layers", config_.single_hidden_layers},
                    {"encoding", json::parse(encoding_.to_json())}};
  const std::string text = header.dump();
  const auto len = static_cast<std::uint32_t>(text.size());
  const std::array<char, 4> len_bytes = {static_cast<char>(len & 0xFF), static_cast<char>((len >> 8) & 0xFF),
                                         static_cast<char>((len >> 16) & 0xFF),
                                         static_cast<char>((len >> 24) & 0xFF)};
  out.write(kBundleMagic.data(), kBundleMagic.size());
  out.put(static_cast<char>(kBundleVersion));
  out.write(len_bytes.data(), len_bytes.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  nnet::write_fused(out, net_);
  if (!out) throw IoError("failed to write model bundle");
}

CoverageModel CoverageModel::read(std::istream& in) {
  std::array<char, 5> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kBundleMagic) throw IoError("not a model bundle");
  const int version = in.get();
  if (version != kBundleVersion) throw IoError("unsupported model bundle version " + std::to_string(version));
  std::array<unsigned char, 4> lb{};
  in.read(reinterpret_cast<char*>(lb.data()), lb.size());
  const std::uint32_t len = lb[0] | (lb[1] << 8) | (lb[2] << 16) | (static_cast<std::uint32_t>(lb[3]) << 24);
  if (!in || len > (1u << 28)) throw IoError("truncated model bundle header");
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw IoError("truncated model bundle header");

  CoverageModel m;
  try {
    const json h = json::parse(text);
    m.variant_ = parse_variant(h.at("variant").get<std::string>());
    m.m_beams_ = h.at("m_beams").get<int>();
    m.config_.hidden_width = h.at("hidden_width").get<int>();
    m.config_.subnet_hidden_layers = h.at("subnet_hidden_layers").get<int>();
    m.config_.single_hidden_layers = h.at("single_hidden_layers").get<int>();
    m.encoding_ = FeatureEncoding::from_json(h.at("encoding").dump());
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model bundle header: ") + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(std::string("malformed model bundle header: ") + e.what());
  }
  m.net_ = nnet::read_fused(in);
  if (m.net_.input_dim() != m.input_width() || m.net_.output_dim() != m.m_beams_ + 1 ||
      m.encoding_.m_beams() != m.m_beams_)
    throw IoError("model bundle network does not match its header");
  return m;
}

void CoverageModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write(out);
}

CoverageModel CoverageModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  return read(in);
}

FitResult fit_model(Variant v, int m_beams, std::span<const Observation> train_rows,
                    std::span<const Observation> val_rows, const ModelConfig& model_cfg,
                    const nnet::TrainConfig& train_cfg, bool exclude_aau) {
  FeatureEncoding enc = FeatureEncoding::fit(train_rows, m_beams, exclude_aau);
  CoverageModel model = CoverageModel::build(v, m_beams, std::move(enc), train_cfg.seed, model_cfg);
  const nnet::TrainingSet tr = model.training_set(train_rows);
  const nnet::TrainingSet va = model.training_set(val_rows);
  nnet::TrainResult result = nnet::train(model.net(), tr, va, train_cfg);
  model.set_net(result.model);
  return {std::move(model), std::move(result)};
}

}  // namespace covpred
