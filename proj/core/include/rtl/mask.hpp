#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rtl/params.hpp"

namespace rtl {

// Binary mask over the prunable (weight-matrix) parameters of a ParamSet.
// Biases carry no mask bits; they are structurally unprunable.
struct BinaryMask {
  // One bit array per layer, row-major, congruent with the weight matrix.
  std::vector<std::vector<std::uint8_t>> layers;

  static BinaryMask ones_like(const ParamSet& p);
  static BinaryMask zeros_like(const ParamSet& p);

  std::size_t total_bits() const;
  std::size_t surviving() const;

  bool congruent_with(const ParamSet& p) const;
  bool congruent_with(const BinaryMask& other) const;

  bool operator==(const BinaryMask& other) const { return layers == other.layers; }
};

// Set of K masks, one per data subset.
struct MaskSet {
  std::vector<BinaryMask> masks;
  std::vector<std::string> subset_ids;

  std::size_t subnet_count() const { return masks.size(); }
};

// Pruning schedule: either remove a fraction of the survivors per round, or a
// fixed count per round. target_sparsity is the fraction of prunable weights
// removed at the end of a run.
struct PruneSchedule {
  enum class Mode { FractionPerRound, FixedCountPerRound };

  Mode mode = Mode::FractionPerRound;
  double fraction = 0.2;       // used in FractionPerRound mode, in (0,1)
  std::size_t count = 0;       // used in FixedCountPerRound mode, >= 1
  double target_sparsity = 0;  // in [0,1)

  void validate() const;

  std::size_t target_removed(std::size_t total) const;

  // How many weights to remove this round given the survivor count.
  // Fraction mode prunes ceil(fraction * survivors) (the IMP convention, so a
  // run may overshoot the target); fixed-count mode clamps to land exactly on
  // the target.
  std::size_t next_amount(std::size_t surviving, std::size_t total) const;
};

// Fraction of prunable weights still active.
double density(const BinaryMask& mask);

// Fraction of prunable weights removed: 1 - density.
double sparsity_of(const BinaryMask& mask);

// Clears exactly `amount` surviving bits, chosen as the smallest-|weight|
// survivors ranked globally across layers. Tie-break: (|w|, layer, flat index).
BinaryMask magnitude_prune(const ParamSet& params, const BinaryMask& mask, std::size_t amount);

// Resets every weight and bias to the initial snapshot.
ParamSet rewind(const ParamSet& params, const ParamSet& init);

}  // namespace rtl
