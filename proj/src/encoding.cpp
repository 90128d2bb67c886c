#include "covpred/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "covpred/error.hpp"
#include "covpred/geo.hpp"
#include "json.hpp"

namespace covpred {

using nlohmann::json;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::proposed: return "proposed";
    case Variant::benchmark2: return "benchmark2";
    case Variant::benchmark3: return "benchmark3";
    case Variant::wrong1: return "wrong1";
    case Variant::wrong2: return "wrong2";
    case Variant::wrong3: return "wrong3";
  }
  return "?";
}

Variant parse_variant(std::string_view tag) {
  for (Variant v : kAllVariants)
    if (to_string(v) == tag) return v;
  throw InvalidInput("unknown model variant '" + std::string(tag) + "'");
}

Standardizer Standardizer::fit(std::span<const double> values) {
  Standardizer s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  // Constant columns stay centered but unscaled.
  s.std = sd > 1e-12 * std::max(1.0, std::abs(s.mean)) ? sd : 1.0;
  return s;
}

namespace {

void raw_numeric(const BsRecord& bs, const EnuOffset& d, std::span<double> out) {
  out[rcol::channels] = bs.beam_static.num_channels;
  out[rcol::freq] = bs.beam_static.carrier_frequency;
  out[rcol::horizontal_azimuth] = bs.orientation.horizontal_azimuth;
  out[rcol::beam_azimuth] = bs.orientation.beam_azimuth;
  out[rcol::mech_tilt] = bs.orientation.mechanical_down_tilt;
  out[rcol::digital_tilt] = bs.orientation.digital_down_tilt;
  out[rcol::total_power] = bs.power.total_tx_power;
  out[rcol::bandwidth] = bs.power.bandwidth;
  out[rcol::sigma] = bs.power.ssb_utilization_sigma;
  out[rcol::east] = d.east;
  out[rcol::north] = d.north;
  out[rcol::up] = d.up;
}

void compressed_numeric(const CompressedFeatures& cf, std::span<double> out) {
  out[ccol::dth] = cf.delta_theta_h;
  out[ccol::dtv] = cf.delta_theta_v;
  out[ccol::dist] = cf.distance;
  out[ccol::freq] = cf.carrier_frequency;
  out[ccol::channels] = cf.beam_static.num_channels;
}

int index_of(const std::vector<std::string>& vocab, const std::string& label) {
  const auto it = std::lower_bound(vocab.begin(), vocab.end(), label);
  return it != vocab.end() && *it == label ? static_cast<int>(it - vocab.begin()) : -1;
}

}  // namespace

FeatureEncoding FeatureEncoding::fit(std::span<const Observation> rows, int m_beams,
                                     bool exclude_aau) {
  if (m_beams < 1) throw InvalidInput("m_beams must be at least 1");
  FeatureEncoding enc;
  enc.exclude_aau_ = exclude_aau;
  enc.m_beams_ = m_beams;
  const std::size_t outputs = static_cast<std::size_t>(m_beams) + 1;

  std::set<std::string> aau, scenario;
  std::vector<std::vector<double>> comp(ccol::numeric), raw(rcol::numeric);
  std::vector<std::vector<double>> rel(outputs), abs(outputs);
  std::array<double, rcol::numeric> rbuf{};
  std::array<double, ccol::numeric> cbuf{};
  for (const Observation& o : rows) {
    const MeasurementSample& s = *o.sample;
    if (s.rsrp.size() != outputs || s.observed.size() != outputs)
      throw ShapeError("sample for " + s.bs_id + " has the wrong beam count");
    CompressedFeatures cf;
    try {
      cf = geo::compress(*o.bs, s.point);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    if (!exclude_aau && !o.bs->beam_static.aau_type.empty()) aau.insert(o.bs->beam_static.aau_type);
    if (!o.bs->beam_static.coverage_scenario.empty())
      scenario.insert(o.bs->beam_static.coverage_scenario);
    compressed_numeric(cf, cbuf);
    for (int c = 0; c < ccol::numeric; ++c) comp[c].push_back(cbuf[c]);
    raw_numeric(*o.bs, geo::enu_offset(o.bs->location, s.point), rbuf);
    for (int c = 0; c < rcol::numeric; ++c) raw[c].push_back(rbuf[c]);
    const double p_t = geo::ssb_tx_power(o.bs->power);
    for (std::size_t j = 0; j < outputs; ++j) {
      if (!s.observed[j]) continue;
      rel[j].push_back(s.rsrp[j] - p_t);
      abs[j].push_back(s.rsrp[j]);
    }
  }
  if (comp[0].empty()) throw InvalidInput("no usable training rows to fit the encoding");

  enc.aau_vocab_.assign(aau.begin(), aau.end());
  enc.scenario_vocab_.assign(scenario.begin(), scenario.end());
  for (int c = 0; c < ccol::numeric; ++c) enc.compressed_[c] = Standardizer::fit(comp[c]);
  for (int c = 0; c < rcol::numeric; ++c) enc.raw_[c] = Standardizer::fit(raw[c]);
  for (std::size_t j = 0; j < outputs; ++j) {
    enc.relative_target_.push_back(Standardizer::fit(rel[j]));
    enc.absolute_target_.push_back(Standardizer::fit(abs[j]));
  }
  enc.fitted_ = true;
  return enc;
}

void FeatureEncoding::require_fitted() const {
  if (!fitted_) throw StateError("feature encoding has not been fitted");
}

int FeatureEncoding::one_hot_width() const {
  return static_cast<int>(aau_vocab_.size() + scenario_vocab_.size());
}

std::vector<int> FeatureEncoding::compressed_static_columns() const {
  std::vector<int> cols{ccol::channels};
  for (int k = 0; k < one_hot_width(); ++k) cols.push_back(ccol::numeric + k);
  return cols;
}

void FeatureEncoding::one_hots(const BeamStatic& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (!exclude_aau_) {
    const int a = index_of(aau_vocab_, s.aau_type);
    if (a >= 0) out[a] = 1.0;
  }
  const int c = index_of(scenario_vocab_, s.coverage_scenario);
  if (c >= 0) out[aau_vocab_.size() + c] = 1.0;
}

void FeatureEncoding::compressed_row(const CompressedFeatures& cf, std::span<double> out) const {
  require_fitted();
  if (out.size() != static_cast<std::size_t>(compressed_width()))
    throw ShapeError("compressed row buffer has the wrong width");
  compressed_numeric(cf, out);
  for (int c = 0; c < ccol::numeric; ++c) out[c] = compressed_[c].apply(out[c]);
  one_hots(cf.beam_static, out.subspan(ccol::numeric));
}

void FeatureEncoding::raw_row(const BsRecord& bs, const SamplePoint& pt,
                              std::span<double> out) const {
  require_fitted();
  if (out.size() != static_cast<std::size_t>(raw_width()))
    throw ShapeError("raw row buffer has the wrong width");
  raw_numeric(bs, geo::enu_offset(bs.location, pt), out);
  for (int c = 0; c < rcol::numeric; ++c) out[c] = raw_[c].apply(out[c]);
  one_hots(bs.beam_static, out.subspan(rcol::numeric));
}

const std::vector<Standardizer>& FeatureEncoding::target_scalers(TargetKind k) const {
  require_fitted();
  return k == TargetKind::relative ? relative_target_ : absolute_target_;
}

bool FeatureEncoding::operator==(const FeatureEncoding& o) const {
  auto same = [](const Standardizer& a, const Standardizer& b) {
    return a.mean == b.mean && a.std == b.std;
  };
  auto same_all = [&](const auto& a, const auto& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same);
  };
  return fitted_ == o.fitted_ && exclude_aau_ == o.exclude_aau_ && m_beams_ == o.m_beams_ &&
         aau_vocab_ == o.aau_vocab_ && scenario_vocab_ == o.scenario_vocab_ &&
         same_all(compressed_, o.compressed_) && same_all(raw_, o.raw_) &&
         same_all(relative_target_, o.relative_target_) &&
         same_all(absolute_target_, o.absolute_target_);
}

namespace {

json scalers_to_json(std::span<const Standardizer> s) {
  json arr = json::array();
  for (const Standardizer& z : s) arr.push_back({z.mean, z.std});
  return arr;
}

std::vector<Standardizer> scalers_from_json(const json& arr) {
  std::vector<Standardizer> out;
  for (const json& e : arr) out.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return out;
}

}  // namespace

std::string FeatureEncoding::to_json() const {
  require_fitted();
  // nlohmann prints doubles with 17 significant digits, so values round-trip.
  const json j{{"exclude_aau", exclude_aau_},
               {"m_beams", m_beams_},
               {"aau_vocab", aau_vocab_},
               {"scenario_vocab", scenario_vocab_},
               {"compressed", scalers_to_json(compressed_)},
               {"raw", scalers_to_json(raw_)},
               {"relative_target", scalers_to_json(relative_target_)},
               {"absolute_target", scalers_to_json(absolute_target_)}};
  return j.dump();
}

FeatureEncoding FeatureEncoding::from_json(const std::string& text) {
  FeatureEncoding enc;
  try {
    const json j = json::parse(text);
    enc.exclude_aau_ = j.at("exclude_aau").get<bool>();
    enc.m_beams_ = j.at("m_beams").get<int>();
    enc.aau_vocab_ = j.at("aau_vocab").get<std::vector<std::string>>();
    enc.scenario_vocab_ = j.at("scenario_vocab").get<std::vector<std::string>>();
    const auto comp = scalers_from_json(j.at("compressed"));
    const auto raw = scalers_from_json(j.at("raw"));
    if (comp.size() != enc.compressed_.size() || raw.size() != enc.raw_.size())
      throw IoError("encoding record has the wrong scaler count");
    std::copy(comp.begin(), comp.end(), enc.compressed_.begin());
    std::copy(raw.begin(), raw.end(), enc.raw_.begin());
    enc.relative_target_ = scalers_from_json(j.at("relative_target"));
    enc.absolute_target_ = scalers_from_json(j.at("absolute_target"));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed encoding record: ") + e.what());
  }
  const auto outputs = static_cast<std::size_t>(enc.m_beams_) + 1;
  if (enc.m_beams_ < 1 || enc.relative_target_.size() != outputs ||
      enc.absolute_target_.size() != outputs)
    throw IoError("encoding record has inconsistent beam count");
  if (!std::is_sorted(enc.aau_vocab_.begin(), enc.aau_vocab_.end()) ||
      !std::is_sorted(enc.scenario_vocab_.begin(), enc.scenario_vocab_.end()))
    throw IoError("encoding vocabularies must be sorted");
  enc.fitted_ = true;
  return enc;
}

}  // namespace covpred
