#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "covpred/encoding.hpp"
#include "covpred/nnet/fused_net.hpp"
#include "covpred/nnet/train.hpp"
#include "covpred/types.hpp"

namespace covpred {

struct ModelConfig {
  int hidden_width = 256;
  int subnet_hidden_layers = 5;  // each of the three fused subnets
  int single_hidden_layers = 6;  // benchmark2 and benchmark3

  void validate() const;
};

/// Input columns read by each subnet of a variant, indexed into the
/// variant's feature row. One entry for the single-network benchmarks.
std::vector<std::vector<int>> variant_part_inputs(Variant v, const FeatureEncoding& enc);

/// A variant network together with the encoding that feeds it.
class CoverageModel {
 public:
  CoverageModel() = default;

  static CoverageModel build(Variant v, int m_beams, FeatureEncoding enc, std::uint64_t seed,
                             const ModelConfig& cfg = {});

  Variant variant() const { return variant_; }
  int m_beams() const { return m_beams_; }
  const ModelConfig& config() const { return config_; }
  const FeatureEncoding& encoding() const { return encoding_; }
  const nnet::FusedNet& net() const { return net_; }
  /// Replaces the network; shapes must match the current one.
  void set_net(nnet::FusedNet net);

  /// benchmark3 learns absolute RSRP from raw inputs; everything else learns
  /// p - p_T from compressed inputs.
  TargetKind target_kind() const;
  bool uses_compressed_features() const { return variant_ != Variant::benchmark3; }
  int input_width() const;

  /// Encoded input row. Throws DegenerateGeometry when the point has no
  /// horizontal offset from the antenna.
  void encode(const BsRecord& bs, const SamplePoint& pt, std::span<double> out) const;

  /// Standardized inputs, targets and masks; degenerate rows are skipped.
  nnet::TrainingSet training_set(std::span<const Observation> rows) const;

  /// Fused network output (standardized target units) for compressed
  /// features. Throws StateError if the encoding is unfitted or the variant
  /// does not consume compressed features.
  Eigen::VectorXd forward_fused(const CompressedFeatures& cf) const;

  /// Predicted RSRP in dBm, SS-RSRP first.
  std::vector<double> predict_rsrp(const BsRecord& bs, const SamplePoint& pt) const;

  /// Row r is bit-identical to predict_rsrp(bs, pts[r]).
  Eigen::MatrixXd predict_rsrp(const BsRecord& bs, std::span<const SamplePoint> pts) const;

  /// Predictions for joined rows; degenerate rows come back as NaN. With
  /// `exact_rows` false the network runs batched, which is faster but may
  /// differ from predict_rsrp in the last bits.
  Eigen::MatrixXd predict_observations(std::span<const Observation> rows,
                                       bool exact_rows = true) const;

  void write(std::ostream& out) const;
  static CoverageModel read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static CoverageModel load(const std::filesystem::path& path);

 private:
  void require_ready() const;
  Eigen::MatrixXd destandardize(const Eigen::MatrixXd& z, std::span<const double> p_t) const;

  Variant variant_ = Variant::proposed;
  int m_beams_ = 0;
  ModelConfig config_;
  FeatureEncoding encoding_;
  nnet::FusedNet net_;
};

struct FitResult {
  CoverageModel model;
  nnet::TrainResult training;
};

/// Fits the encoding on `train_rows`, builds the variant and trains it with
/// early stopping against `val_rows`.
FitResult fit_model(Variant v, int m_beams, std::span<const Observation> train_rows,
                    std::span<const Observation> val_rows, const ModelConfig& model_cfg,
                    const nnet::TrainConfig& train_cfg, bool exclude_aau);

}  // namespace covpred
