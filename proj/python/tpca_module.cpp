#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>

#include "tpca/benchmarks.hpp"
#include "tpca/csv_io.hpp"
#include "tpca/simlab.hpp"
#include "tpca/variance.hpp"

namespace py = pybind11;

namespace {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Values + optional mask; without a mask, NaN cells count as missing.
tpca::Panel make_panel(const tpca::Matrix& values,
                       const std::optional<BoolArray>& mask) {
  tpca::Mask m;
  if (mask) {
    m = *mask;
  } else {
    m = values.array().unaryExpr([](double v) { return !std::isnan(v); });
  }
  tpca::Matrix v =
      m.select(values, tpca::Matrix::Zero(values.rows(), values.cols()));
  return tpca::Panel(std::move(v), std::move(m));
}

tpca::ObsStatsMode make_mode(const std::string& mode, int sample_size,
                             std::uint64_t seed, Eigen::Index n) {
  if (mode == "exact") return tpca::ObsStatsMode::exact();
  if (mode == "sampled") return tpca::ObsStatsMode::sample(sample_size, seed);
  if (mode == "auto")
    return n <= 30 ? tpca::ObsStatsMode::exact()
                   : tpca::ObsStatsMode::sample(sample_size, seed);
  throw tpca::InvalidArgument("mode must be exact|sampled|auto");
}

}  // namespace

PYBIND11_MODULE(_tpca, m) {
  m.doc() = "Target-PCA: latent factors and imputation for partially "
            "observed panels";

  py::register_exception<tpca::InvalidArgument>(m, "InvalidArgument",
                                                PyExc_ValueError);
  py::register_exception<tpca::InfeasibleError>(m, "InfeasibleError",
                                                PyExc_RuntimeError);
  py::register_exception<tpca::NumericalError>(m, "NumericalError",
                                               PyExc_ArithmeticError);

  py::class_<tpca::FactorFit>(m, "FactorFit")
      .def_readonly("factors", &tpca::FactorFit::factors)
      .def_readonly("loadings_x", &tpca::FactorFit::loadings_x)
      .def_readonly("loadings_y", &tpca::FactorFit::loadings_y)
      .def_readonly("eigenvalues", &tpca::FactorFit::eigenvalues)
      .def_readonly("gamma", &tpca::FactorFit::gamma)
      .def_readonly("common_x", &tpca::FactorFit::common_x)
      .def_readonly("common_y", &tpca::FactorFit::common_y);

  m.def(
      "fit",
      [](const tpca::Matrix& x, const tpca::Matrix& y, int k, double gamma,
         const std::optional<BoolArray>& x_mask,
         const std::optional<BoolArray>& y_mask) {
        return tpca::fit(make_panel(x, x_mask), make_panel(y, y_mask), k,
                         gamma);
      },
      py::arg("x"), py::arg("y"), py::arg("k"), py::arg("gamma"),
      py::arg("x_mask") = std::nullopt, py::arg("y_mask") = std::nullopt,
      "Target-PCA fit; NaNs (or an explicit mask) mark missing cells.");

  m.def(
      "impute",
      [](const tpca::Matrix& x, const tpca::Matrix& y, int k, double gamma,
         const std::optional<BoolArray>& x_mask,
         const std::optional<BoolArray>& y_mask) {
        const tpca::Panel yp = make_panel(y, y_mask);
        const tpca::FactorFit f =
            tpca::fit(make_panel(x, x_mask), yp, k, gamma);
        return tpca::impute(f, yp).values;
      },
      py::arg("x"), py::arg("y"), py::arg("k"), py::arg("gamma"),
      py::arg("x_mask") = std::nullopt, py::arg("y_mask") = std::nullopt,
      "Fit, then replace missing target cells with the common component.");

  m.def(
      "select_gamma",
      [](const tpca::Matrix& x, const tpca::Matrix& y, int k,
         const std::string& objective, std::uint64_t seed,
         const std::optional<BoolArray>& x_mask,
         const std::optional<BoolArray>& y_mask) {
        const tpca::Panel yp = make_panel(y, y_mask);
        const tpca::GammaSelection sel = tpca::select_gamma(
            make_panel(x, x_mask), yp, k, tpca::default_r_grid(),
            objective == "missing" ? tpca::GammaObjective::MissingEntries
                                   : tpca::GammaObjective::AllEntries,
            make_mode("auto", 100000, seed, yp.units()));
        py::dict out;
        out["gamma_first"] = sel.gamma_first;
        out["gamma_star"] = sel.gamma_star;
        out["r_star"] = sel.r_star;
        out["r_grid"] = sel.r_grid;
        out["objective_values"] = sel.objective_values;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("k"), py::arg("objective") = "all",
      py::arg("seed") = 0, py::arg("x_mask") = std::nullopt,
      py::arg("y_mask") = std::nullopt,
      "Two-stage data-driven target weight.");

  m.def(
      "obs_stats",
      [](const BoolArray& mask, const std::string& mode, int sample_size,
         std::uint64_t seed) {
        const tpca::ObsStats s = tpca::obs_stats(
            mask, make_mode(mode, sample_size, seed, mask.cols()));
        py::dict out;
        out["omega1"] = s.omega1;
        out["omega2"] = s.omega2;
        out["omega3"] = s.omega3;
        out["omega1_i"] = s.omega1_i;
        out["omega21_i"] = s.omega21_i;
        out["omega22_i"] = s.omega22_i;
        out["omega23_i"] = s.omega23_i;
        out["omega3_i"] = s.omega3_i;
        out["q_ii"] = s.q_ii;
        out["sampled"] = s.mode.sampled;
        return out;
      },
      py::arg("mask"), py::arg("mode") = "auto",
      py::arg("sample_size") = 100000, py::arg("seed") = 0,
      "Observation-pattern statistics of a boolean mask.");

  m.def(
      "anchor_forward_fill",
      [](const tpca::Matrix& y, const std::optional<BoolArray>& mask) {
        tpca::Panel p = tpca::anchor_forward_fill(make_panel(y, mask));
        return py::make_tuple(p.values, BoolArray(p.mask));
      },
      py::arg("y"), py::arg("mask") = std::nullopt);

  m.def(
      "generate_mask",
      [](const std::string& kind, Eigen::Index periods, Eigen::Index units,
         py::kwargs kwargs) {
        tpca::MaskSpec spec;
        spec.kind = tpca::mask_kind_from_string(kind);
        tpca::Matrix values, loadings;
        tpca::MaskContext ctx;
        for (auto item : kwargs) {
          const std::string key = py::cast<std::string>(item.first);
          if (key == "p") spec.p = py::cast<double>(item.second);
          else if (key == "start_fraction")
            spec.start_fraction = py::cast<double>(item.second);
          else if (key == "c") spec.c = py::cast<double>(item.second);
          else if (key == "period") spec.period = py::cast<int>(item.second);
          else if (key == "phase") spec.phase = py::cast<int>(item.second);
          else if (key == "t1") spec.t1 = py::cast<int>(item.second);
          else if (key == "t2") spec.t2 = py::cast<int>(item.second);
          else if (key == "threshold")
            spec.threshold = py::cast<double>(item.second);
          else if (key == "p1") spec.p1 = py::cast<double>(item.second);
          else if (key == "seed")
            spec.seed = py::cast<std::uint64_t>(item.second);
          else if (key == "values") {
            values = py::cast<tpca::Matrix>(item.second);
            ctx.values = &values;
          } else if (key == "loadings") {
            loadings = py::cast<tpca::Matrix>(item.second);
            ctx.loadings = &loadings;
          } else {
            throw tpca::InvalidArgument("unknown mask parameter: " + key);
          }
        }
        return BoolArray(tpca::generate_mask(spec, periods, units, ctx));
      },
      py::arg("kind"), py::arg("periods"), py::arg("units"),
      "Seeded observation-pattern generator.");

  m.def("load_csv",
        [](const std::string& path) {
          tpca::Panel p = tpca::load_csv(path);
          return py::make_tuple(p.values, BoolArray(p.mask), p.unit_names,
                                p.time_index);
        },
        py::arg("path"), "FRED-MD-layout CSV loader.");
}
