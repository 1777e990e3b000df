#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tpca/panel.hpp"

namespace tpca {

/// Seeded generators for every observation pattern used in the simulations.
struct MaskSpec {
  enum class Kind {
    MAR,
    Block,
    Staggered,
    LowFrequency,
    MixedFrequency,
    Censoring,
    LoadingDependent,
    FullyObserved,
  };

  Kind kind = Kind::FullyObserved;
  double p = 1.0;               // MAR / Block observation probability
  double start_fraction = 0.5;  // Block: missingness begins at this fraction
  double c = 0.0;               // Staggered: earliest adoption fraction
  int period = 1;               // LowFrequency m
  int phase = 0;                // LowFrequency phase
  int t1 = 1, t2 = 1;           // MixedFrequency periods for the two halves
  double threshold = 0.0;       // Censoring / LoadingDependent
  double p1 = 1.0;              // LoadingDependent observation prob. if selected
  std::uint64_t seed = 0;

  static MaskSpec mar(double p, std::uint64_t seed);
  static MaskSpec block(double p, std::uint64_t seed,
                        double start_fraction = 0.5);
  static MaskSpec staggered(double c, std::uint64_t seed);
  static MaskSpec low_frequency(int period, int phase = 0);
  static MaskSpec mixed_frequency(int t1, int t2);
  static MaskSpec censoring(double threshold);
  static MaskSpec loading_dependent(double threshold, double p1,
                                    std::uint64_t seed);
  static MaskSpec fully_observed();
};

std::string to_string(MaskSpec::Kind kind);
MaskSpec::Kind mask_kind_from_string(const std::string& tag);

/// Optional context some generators need: Censoring masks on |value|,
/// LoadingDependent selects units by their second loading.
struct MaskContext {
  const Matrix* values = nullptr;    // T x N
  const Matrix* loadings = nullptr;  // N x k, k >= 2 for LoadingDependent
};

Mask generate_mask(const MaskSpec& spec, Index periods, Index units,
                   const MaskContext& context = {});

struct HeldOutCell {
  Index t = 0;
  Index i = 0;
  double truth = 0.0;
};

struct MaskedPanel {
  Panel panel;
  std::vector<HeldOutCell> held_out;
};

/// Intersect the panel's mask with `mask`; cells that were observed and are
/// now hidden become the held-out evaluation set.
MaskedPanel apply_mask(const Panel& p, const Mask& mask);

}  // namespace tpca
