#include "rtl/mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace rtl {

BinaryMask BinaryMask::ones_like(const ParamSet& p) {
  BinaryMask m;
  for (const auto& l : p.layers) m.layers.emplace_back(l.weight.size(), std::uint8_t{1});
  return m;
}

BinaryMask BinaryMask::zeros_like(const ParamSet& p) {
  BinaryMask m;
  for (const auto& l : p.layers) m.layers.emplace_back(l.weight.size(), std::uint8_t{0});
  return m;
}

std::size_t BinaryMask::total_bits() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::size_t BinaryMask::surviving() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    for (std::uint8_t b : l) n += b;
  }
  return n;
}

bool BinaryMask::congruent_with(const ParamSet& p) const {
  if (layers.size() != p.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].size() != p.layers[i].weight.size()) return false;
  }
  return true;
}

bool BinaryMask::congruent_with(const BinaryMask& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].size() != other.layers[i].size()) return false;
  }
  return true;
}

void PruneSchedule::validate() const {
  if (target_sparsity < 0.0 || target_sparsity >= 1.0) {
    throw std::invalid_argument("PruneSchedule: target_sparsity must be in [0,1)");
  }
  if (mode == Mode::FractionPerRound) {
    if (fraction <= 0.0 || fraction >= 1.0) throw std::invalid_argument("PruneSchedule: fraction must be in (0,1)");
  } else {
    if (count < 1) throw std::invalid_argument("PruneSchedule: count must be >= 1");
  }
}

std::size_t PruneSchedule::target_removed(std::size_t total) const {
  return static_cast<std::size_t>(std::llround(target_sparsity * static_cast<double>(total)));
}

std::size_t PruneSchedule::next_amount(std::size_t surviving, std::size_t total) const {
  const std::size_t goal = target_removed(total);
  const std::size_t removed = total - surviving;
  if (removed >= goal) return 0;
  if (mode == Mode::FractionPerRound) {
    const std::size_t amount =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(surviving)));
    return std::min(amount, surviving);
  }
  return std::min(count, goal - removed);
}

double density(const BinaryMask& mask) {
  const std::size_t total = mask.total_bits();
  if (total == 0) return 0.0;
  return static_cast<double>(mask.surviving()) / static_cast<double>(total);
}

double sparsity_of(const BinaryMask& mask) { return 1.0 - density(mask); }

BinaryMask magnitude_prune(const ParamSet& params, const BinaryMask& mask, std::size_t amount) {
  if (!mask.congruent_with(params)) throw std::invalid_argument("magnitude_prune: mask not congruent with params");
  if (amount > mask.surviving()) throw std::invalid_argument("magnitude_prune: amount exceeds surviving weights");
  if (amount == 0) return mask;

  struct Entry {
    double magnitude;
    std::size_t layer;
    std::size_t flat;
  };
  std::vector<Entry> survivors;
  survivors.reserve(mask.surviving());
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    const auto& w = params.layers[l].weight.data;
    const auto& bits = mask.layers[l];
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) survivors.push_back({std::abs(w[i]), l, i});
    }
  }

  auto key_less = [](const Entry& a, const Entry& b) {
    return std::tie(a.magnitude, a.layer, a.flat) < std::tie(b.magnitude, b.layer, b.flat);
  };
  std::nth_element(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(amount - 1), survivors.end(),
                   key_less);
  std::sort(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(amount), key_less);

  BinaryMask pruned = mask;
  for (std::size_t i = 0; i < amount; ++i) {
    pruned.layers[survivors[i].layer][survivors[i].flat] = 0;
  }
  return pruned;
}

ParamSet rewind(const ParamSet& params, const ParamSet& init) {
  if (!params.congruent_with(init)) throw std::invalid_argument("rewind: shape mismatch");
  return init;
}

}  // namespace rtl
