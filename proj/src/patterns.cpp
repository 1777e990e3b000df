#include "tpca/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpca/rng.hpp"

namespace tpca {

MaskSpec MaskSpec::mar(double p, std::uint64_t seed) {
  MaskSpec s;
  s.kind = Kind::MAR;
  s.p = p;
  s.seed = seed;
  return s;
}

MaskSpec MaskSpec::block(double p, std::uint64_t seed, double start_fraction) {
  MaskSpec s;
  s.kind = Kind::Block;
  s.p = p;
  s.start_fraction = start_fraction;
  s.seed = seed;
  return s;
}

MaskSpec MaskSpec::staggered(double c, std::uint64_t seed) {
  MaskSpec s;
  s.kind = Kind::Staggered;
  s.c = c;
  s.seed = seed;
  return s;
}

MaskSpec MaskSpec::low_frequency(int period, int phase) {
  MaskSpec s;
  s.kind = Kind::LowFrequency;
  s.period = period;
  s.phase = phase;
  return s;
}

MaskSpec MaskSpec::mixed_frequency(int t1, int t2) {
  MaskSpec s;
  s.kind = Kind::MixedFrequency;
  s.t1 = t1;
  s.t2 = t2;
  return s;
}

MaskSpec MaskSpec::censoring(double threshold) {
  MaskSpec s;
  s.kind = Kind::Censoring;
  s.threshold = threshold;
  return s;
}

MaskSpec MaskSpec::loading_dependent(double threshold, double p1,
                                     std::uint64_t seed) {
  MaskSpec s;
  s.kind = Kind::LoadingDependent;
  s.threshold = threshold;
  s.p1 = p1;
  s.seed = seed;
  return s;
}

MaskSpec MaskSpec::fully_observed() { return MaskSpec{}; }

std::string to_string(MaskSpec::Kind kind) {
  switch (kind) {
    case MaskSpec::Kind::MAR: return "mar";
    case MaskSpec::Kind::Block: return "block";
    case MaskSpec::Kind::Staggered: return "staggered";
    case MaskSpec::Kind::LowFrequency: return "low_frequency";
    case MaskSpec::Kind::MixedFrequency: return "mixed_frequency";
    case MaskSpec::Kind::Censoring: return "censoring";
    case MaskSpec::Kind::LoadingDependent: return "loading_dependent";
    case MaskSpec::Kind::FullyObserved: return "fully_observed";
  }
  throw InvalidArgument("unknown mask kind");
}

MaskSpec::Kind mask_kind_from_string(const std::string& tag) {
  if (tag == "mar") return MaskSpec::Kind::MAR;
  if (tag == "block") return MaskSpec::Kind::Block;
  if (tag == "staggered") return MaskSpec::Kind::Staggered;
  if (tag == "low_frequency") return MaskSpec::Kind::LowFrequency;
  if (tag == "mixed_frequency") return MaskSpec::Kind::MixedFrequency;
  if (tag == "censoring") return MaskSpec::Kind::Censoring;
  if (tag == "loading_dependent") return MaskSpec::Kind::LoadingDependent;
  if (tag == "fully_observed") return MaskSpec::Kind::FullyObserved;
  throw InvalidArgument("unknown mask kind: " + tag);
}

namespace {

std::vector<Index> random_unit_order(Index n, CounterRng rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // Fisher-Yates with the counter RNG for cross-platform determinism.
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(
        rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  return order;
}

}  // namespace

Mask generate_mask(const MaskSpec& spec, Index periods, Index units,
                   const MaskContext& context) {
  if (periods < 1 || units < 1)
    throw InvalidArgument("generate_mask: need T >= 1 and N >= 1");
  Mask mask = Mask::Constant(periods, units, true);
  CounterRng rng(spec.seed);

  switch (spec.kind) {
    case MaskSpec::Kind::FullyObserved:
      break;

    case MaskSpec::Kind::MAR: {
      if (!(spec.p > 0.0 && spec.p <= 1.0))
        throw InvalidArgument("generate_mask: MAR p must be in (0, 1]");
      for (Index i = 0; i < units; ++i)
        for (Index t = 0; t < periods; ++t)
          mask(t, i) = rng.bernoulli(spec.p);
      break;
    }

    case MaskSpec::Kind::Block: {
      if (!(spec.p > 0.0 && spec.p <= 1.0))
        throw InvalidArgument("generate_mask: block p must be in (0, 1]");
      // 2(1-p) fraction of random units are missing from start_fraction * T.
      const Index start = static_cast<Index>(
          std::floor(spec.start_fraction * static_cast<double>(periods)));
      const Index n_missing = static_cast<Index>(
          std::floor(2.0 * (1.0 - spec.p) * static_cast<double>(units)));
      const std::vector<Index> order = random_unit_order(units, rng);
      for (Index s = 0; s < std::min(n_missing, units); ++s) {
        const Index i = order[static_cast<std::size_t>(s)];
        for (Index t = start; t < periods; ++t) mask(t, i) = false;
      }
      break;
    }

    case MaskSpec::Kind::Staggered: {
      if (!(spec.c >= 0.0 && spec.c < 1.0))
        throw InvalidArgument("generate_mask: staggered c must be in [0, 1)");
      // At period t >= cT a (t/T - c) fraction of units is treated; the
      // treated set extends a fixed random ordering, so treatment is
      // monotone per unit.
      const std::vector<Index> order = random_unit_order(units, rng);
      for (Index t = 0; t < periods; ++t) {
        const double frac =
            static_cast<double>(t) / static_cast<double>(periods) - spec.c;
        if (frac <= 0.0) continue;
        const Index n_treated = std::min(
            units,
            static_cast<Index>(std::floor(frac * static_cast<double>(units))));
        for (Index s = 0; s < n_treated; ++s)
          mask(t, order[static_cast<std::size_t>(s)]) = false;
      }
      break;
    }

    case MaskSpec::Kind::LowFrequency: {
      if (spec.period < 1)
        throw InvalidArgument("generate_mask: low-frequency period must be "
                              ">= 1");
      for (Index t = 0; t < periods; ++t) {
        const bool obs =
            (t % spec.period) == (spec.phase % spec.period);
        if (!obs) mask.row(t).setConstant(false);
      }
      break;
    }

    case MaskSpec::Kind::MixedFrequency: {
      if (spec.t1 < 1 || spec.t2 < 1)
        throw InvalidArgument("generate_mask: mixed-frequency periods must "
                              "be >= 1");
      const Index half = units / 2;
      for (Index t = 0; t < periods; ++t) {
        const bool first = (t % spec.t1) == 0;
        const bool second = (t % spec.t2) == 0;
        for (Index i = 0; i < units; ++i)
          mask(t, i) = (i < half) ? first : second;
      }
      break;
    }

    case MaskSpec::Kind::Censoring: {
      if (context.values == nullptr)
        throw InvalidArgument("generate_mask: censoring requires value "
                              "context");
      if (context.values->rows() != periods ||
          context.values->cols() != units)
        throw InvalidArgument("generate_mask: value context has wrong "
                              "dimensions");
      for (Index i = 0; i < units; ++i)
        for (Index t = 0; t < periods; ++t)
          mask(t, i) = std::abs((*context.values)(t, i)) <= spec.threshold;
      break;
    }

    case MaskSpec::Kind::LoadingDependent: {
      if (context.loadings == nullptr)
        throw InvalidArgument("generate_mask: loading-dependent masks "
                              "require loading context");
      if (context.loadings->rows() != units || context.loadings->cols() < 2)
        throw InvalidArgument("generate_mask: loading context needs N rows "
                              "and >= 2 columns");
      if (!(spec.p1 > 0.0 && spec.p1 <= 1.0))
        throw InvalidArgument("generate_mask: p1 must be in (0, 1]");
      for (Index i = 0; i < units; ++i) {
        const bool selected =
            std::abs((*context.loadings)(i, 1)) > spec.threshold;
        for (Index t = 0; t < periods; ++t)
          mask(t, i) = selected ? rng.bernoulli(spec.p1) : true;
      }
      break;
    }
  }
  return mask;
}

MaskedPanel apply_mask(const Panel& p, const Mask& mask) {
  p.check();
  if (mask.rows() != p.periods() || mask.cols() != p.units())
    throw InvalidArgument("apply_mask: mask dimensions do not match panel");

  MaskedPanel out;
  out.panel = p;
  for (Index i = 0; i < p.units(); ++i) {
    for (Index t = 0; t < p.periods(); ++t) {
      if (!mask(t, i) && p.mask(t, i)) {
        out.held_out.push_back({t, i, p.values(t, i)});
        out.panel.mask(t, i) = false;
        out.panel.values(t, i) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace tpca
