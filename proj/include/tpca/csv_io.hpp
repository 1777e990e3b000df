#pragma once

#include <string>
#include <vector>

#include "tpca/panel.hpp"

namespace tpca {

/// FRED-MD layout: first column holds time labels, header row holds unit
/// names, an optional second header row carries transform codes 1-7. Empty
/// cells and the sentinels "NA"/"NaN" (case-insensitive) are missing.
struct CsvOptions {
  bool apply_transform_codes = true;
};

Panel load_csv(const std::string& path, const CsvOptions& options = {});
Panel parse_csv(const std::string& text, const CsvOptions& options = {});

void write_csv(const std::string& path, const Panel& p);
std::string format_csv(const Panel& p);

/// The conventional FRED-MD transforms: 1 level, 2 delta, 3 delta^2, 4 log,
/// 5 delta log, 6 delta^2 log, 7 delta percent change. Head cells consumed by
/// differencing become missing; T is unchanged.
std::vector<double> apply_transform(int code, const std::vector<double>& x,
                                    const std::vector<bool>& observed,
                                    std::vector<bool>& out_observed);

}  // namespace tpca
