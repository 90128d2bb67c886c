#pragma once

#include <filesystem>
#include <iosfwd>

#include "covpred/nnet/fused_net.hpp"
#include "covpred/nnet/mlp.hpp"

namespace covpred::nnet {

// Binary weight format, little-endian:
//   "CPMLP" + u8 version
//   i32 input_dim, hidden_layers, hidden_width, output_dim, activation
//   per layer: weight (fan_in x fan_out, row-major f64), bias (f64)
// A fused net is "CPFUS" + u8 version, i32 input_dim, i32 part count, then
// per part: i32 column count, i32 columns..., embedded MLP record.

void write_mlp(std::ostream& out, const Mlp& m);
Mlp read_mlp(std::istream& in);

void write_fused(std::ostream& out, const FusedNet& net);
FusedNet read_fused(std::istream& in);

void save_mlp(const std::filesystem::path& path, const Mlp& m);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace covpred::nnet
