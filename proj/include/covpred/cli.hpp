#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "covpred/error.hpp"

namespace covpred::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDataError = 3,
  kConvergence = 4,
  kIoError = 5,
};

/// Bad command line. The message carries the help text when useful.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// `--help` was given; what() holds the help text.
class HelpRequested : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Options shared by commands that train networks.
struct TrainingOptions {
  int hidden_width = 256;
  int subnet_layers = 5;
  int single_layers = 6;
  int max_epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;
  int early_stop_window = 10;
  double early_stop_threshold = 0.01;
  std::string stall_rule = "per-epoch";  // or "windowed"
  bool stop_on_either = false;
  bool exclude_aau = false;
};

struct SynthCommand {
  std::uint64_t seed = 0;
  int n_bs = 60;
  int samples_per_bs = 500;
  std::optional<std::string> scenario;  // JSON file; defaults otherwise
  std::optional<double> noise_std;      // overrides the scenario
  std::string out_dir;                  // receives bs.csv, measurements.csv, scenario.json
};

struct TrainCommand {
  std::string bs_file;
  std::string meas_file;
  std::string variant = "proposed";
  double rate = 0.5;
  std::uint64_t seed = 0;
  std::string model_out;
  std::optional<std::string> history_out;
  std::optional<std::string> metrics_out;
  TrainingOptions training;
};

struct EvalGridCommand {
  std::string bs_file;
  std::string meas_file;
  std::vector<std::string> methods;
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;
  std::string results_out;
  std::optional<std::string> summary_out;
  std::optional<std::string> timing_out;
  int jobs = 1;
  int knn_k = 50;
  double lasso_lambda = 1.0;
  TrainingOptions training;
};

struct PredictMapCommand {
  std::string model;
  std::string bs_file;
  std::vector<std::string> bs_ids;  // empty: every station in the file
  std::optional<double> origin_lon;
  std::optional<double> origin_lat;
  std::optional<double> extent_east;
  std::optional<double> extent_north;
  double resolution = 10.0;
  double altitude = 120.0;
  double radius = 2000.0;
  std::string out_stem;  // writes <stem>.csv, <stem>.ppm, <stem>.meta
  bool per_bs = false;   // also export <stem>_<bs_id>.* for every station
};

struct SampleMapCommand {
  std::string map_stem;  // reads <stem>.csv and <stem>.meta
  std::string points_file;
  std::string out;
  bool skip_outside = false;
};

struct InspectModelCommand {
  std::string model;
  std::optional<std::string> out;  // stdout when absent
};

using Command = std::variant<SynthCommand, TrainCommand, EvalGridCommand, PredictMapCommand,
                             SampleMapCommand, InspectModelCommand>;

/// Parses argv (argv[0] is the program name). Throws UsageError, or
/// HelpRequested for --help.
Command parse_args(int argc, const char* const* argv);

/// Seeds as "0-19", "3" or "0,4,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Executes a command; errors are mapped onto exit codes and logged.
int run(const Command& cmd);

/// parse_args + run, printing usage errors to stderr.
int main_entry(int argc, const char* const* argv);

}  // namespace covpred::cli
