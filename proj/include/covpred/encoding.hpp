#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "covpred/types.hpp"

namespace covpred {

enum class Variant { proposed, benchmark2, benchmark3, wrong1, wrong2, wrong3 };

inline constexpr std::array<Variant, 6> kAllVariants = {
    Variant::proposed, Variant::benchmark2, Variant::benchmark3,
    Variant::wrong1,   Variant::wrong2,     Variant::wrong3};

std::string_view to_string(Variant v);
/// Throws InvalidInput for anything outside the six tags.
Variant parse_variant(std::string_view tag);

/// One measurement paired with the station that emitted it. Both pointers
/// must outlive the observation.
struct Observation {
  const BsRecord* bs = nullptr;
  const MeasurementSample* sample = nullptr;
};

/// z-score constants; a column without spread keeps std = 1.
struct Standardizer {
  double mean = 0.0;
  double std = 1.0;

  static Standardizer fit(std::span<const double> values);
  double apply(double v) const { return (v - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

// Compressed feature row: these five numeric columns, then the AAU one-hot
// block, then the coverage-scenario one-hot block.
namespace ccol {
inline constexpr int dth = 0;
inline constexpr int dtv = 1;
inline constexpr int dist = 2;
inline constexpr int freq = 3;
inline constexpr int channels = 4;
inline constexpr int numeric = 5;
}  // namespace ccol

// Raw feature row: these twelve numeric columns, then the two one-hot blocks.
namespace rcol {
inline constexpr int channels = 0;
inline constexpr int freq = 1;
inline constexpr int horizontal_azimuth = 2;
inline constexpr int beam_azimuth = 3;
inline constexpr int mech_tilt = 4;
inline constexpr int digital_tilt = 5;
inline constexpr int total_power = 6;
inline constexpr int bandwidth = 7;
inline constexpr int sigma = 8;
inline constexpr int east = 9;
inline constexpr int north = 10;
inline constexpr int up = 11;
inline constexpr int numeric = 12;
}  // namespace rcol

enum class TargetKind { relative, absolute };

class FeatureEncoding {
 public:
  FeatureEncoding() = default;

  /// Fits vocabularies and standardization constants on training rows.
  /// Rows with degenerate geometry are ignored. Vocabularies are sorted.
  static FeatureEncoding fit(std::span<const Observation> rows, int m_beams, bool exclude_aau);

  bool fitted() const { return fitted_; }
  bool exclude_aau() const { return exclude_aau_; }
  int m_beams() const { return m_beams_; }
  const std::vector<std::string>& aau_vocab() const { return aau_vocab_; }
  const std::vector<std::string>& scenario_vocab() const { return scenario_vocab_; }
  int one_hot_width() const;
  int compressed_width() const { return ccol::numeric + one_hot_width(); }
  int raw_width() const { return rcol::numeric + one_hot_width(); }

  /// Column indices of the static block (channels and both one-hots).
  std::vector<int> compressed_static_columns() const;

  /// Standardized feature rows. Unseen categories encode as all zeros.
  void compressed_row(const CompressedFeatures& cf, std::span<double> out) const;
  void raw_row(const BsRecord& bs, const SamplePoint& pt, std::span<double> out) const;

  const Standardizer& compressed_scaler(int col) const { return compressed_[col]; }
  const Standardizer& raw_scaler(int col) const { return raw_[col]; }
  /// Per-output target scaling, index 0 is SS-RSRP.
  const std::vector<Standardizer>& target_scalers(TargetKind k) const;

  std::string to_json() const;
  static FeatureEncoding from_json(const std::string& text);

  bool operator==(const FeatureEncoding& o) const;

 private:
  void require_fitted() const;
  void one_hots(const BeamStatic& s, std::span<double> out) const;

  bool fitted_ = false;
  bool exclude_aau_ = false;
  int m_beams_ = 0;
  std::vector<std::string> aau_vocab_;
  std::vector<std::string> scenario_vocab_;
  std::array<Standardizer, ccol::numeric> compressed_{};
  std::array<Standardizer, rcol::numeric> raw_{};
  std::vector<Standardizer> relative_target_;
  std::vector<Standardizer> absolute_target_;
};

}  // namespace covpred
