#include "tpca/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tpca {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_missing_token(const std::string& raw) {
  const std::string t = lower(trimmed(raw));
  return t.empty() || t == "na" || t == "nan";
}

double parse_number(const std::string& raw) {
  const std::string t = trimmed(raw);
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("csv: non-numeric cell '" + raw + "'");
  }
  if (pos != t.size())
    throw InvalidArgument("csv: non-numeric cell '" + raw + "'");
  return v;
}

}  // namespace

std::vector<double> apply_transform(int code, const std::vector<double>& x,
                                    const std::vector<bool>& observed,
                                    std::vector<bool>& out_observed) {
  if (code < 1 || code > 7)
    throw InvalidArgument("csv: unknown transform code " +
                          std::to_string(code));
  const std::size_t n = x.size();
  if (observed.size() != n)
    throw InvalidArgument("apply_transform: size mismatch");

  std::vector<double> lx(n, 0.0);
  std::vector<bool> lobs(n, false);
  const bool uses_log = code >= 4;
  for (std::size_t t = 0; t < n; ++t) {
    if (!observed[t]) continue;
    if (uses_log) {
      if (x[t] > 0.0) {
        lx[t] = std::log(x[t]);
        lobs[t] = true;
      }
    } else {
      lx[t] = x[t];
      lobs[t] = true;
    }
  }

  std::vector<double> out(n, 0.0);
  out_observed.assign(n, false);
  auto set = [&](std::size_t t, double v) {
    out[t] = v;
    out_observed[t] = true;
  };
  for (std::size_t t = 0; t < n; ++t) {
    switch (code) {
      case 1:
      case 4:
        if (lobs[t]) set(t, lx[t]);
        break;
      case 2:
      case 5:
        if (t >= 1 && lobs[t] && lobs[t - 1]) set(t, lx[t] - lx[t - 1]);
        break;
      case 3:
      case 6:
        if (t >= 2 && lobs[t] && lobs[t - 1] && lobs[t - 2])
          set(t, lx[t] - 2.0 * lx[t - 1] + lx[t - 2]);
        break;
      case 7:
        if (t >= 2 && observed[t] && observed[t - 1] && observed[t - 2] &&
            x[t - 1] != 0.0 && x[t - 2] != 0.0)
          set(t, x[t] / x[t - 1] - x[t - 1] / x[t - 2]);
        break;
    }
  }
  return out;
}

Panel parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trimmed(line).empty() && in.eof()) break;
    rows.push_back(split_csv_line(line));
  }
  if (rows.size() < 2) throw InvalidArgument("csv: need a header and data");

  const std::size_t width = rows[0].size();
  if (width < 2) throw InvalidArgument("csv: need a time column and data");
  for (const auto& r : rows) {
    if (r.size() != width)
      throw InvalidArgument("csv: ragged row (expected " +
                            std::to_string(width) + " cells, got " +
                            std::to_string(r.size()) + ")");
  }

  std::vector<std::string> unit_names(rows[0].begin() + 1, rows[0].end());
  for (auto& s : unit_names) s = trimmed(s);

  std::size_t first_data = 1;
  std::vector<int> codes;
  const std::string second_label =
      rows.size() > 1 ? lower(trimmed(rows[1][0])) : "";
  if (second_label.rfind("transform", 0) == 0) {
    first_data = 2;
    for (std::size_t c = 1; c < width; ++c) {
      const double v = parse_number(rows[1][c]);
      const int code = static_cast<int>(std::llround(v));
      if (code < 1 || code > 7 || v != static_cast<double>(code))
        throw InvalidArgument("csv: unknown transform code '" + rows[1][c] +
                              "'");
      codes.push_back(code);
    }
  }

  const Index T = static_cast<Index>(rows.size() - first_data);
  const Index N = static_cast<Index>(width - 1);
  if (T < 1) throw InvalidArgument("csv: no data rows");

  Panel p;
  p.values = Matrix::Zero(T, N);
  p.mask = Mask::Constant(T, N, false);
  p.unit_names = std::move(unit_names);
  p.time_index.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    const auto& r = rows[first_data + static_cast<std::size_t>(t)];
    p.time_index.push_back(trimmed(r[0]));
    for (Index i = 0; i < N; ++i) {
      const std::string& cell = r[static_cast<std::size_t>(i) + 1];
      if (is_missing_token(cell)) continue;
      p.values(t, i) = parse_number(cell);
      p.mask(t, i) = true;
    }
  }

  if (!codes.empty() && options.apply_transform_codes) {
    for (Index i = 0; i < N; ++i) {
      std::vector<double> x(static_cast<std::size_t>(T));
      std::vector<bool> obs(static_cast<std::size_t>(T));
      for (Index t = 0; t < T; ++t) {
        x[static_cast<std::size_t>(t)] = p.values(t, i);
        obs[static_cast<std::size_t>(t)] = p.mask(t, i);
      }
      std::vector<bool> out_obs;
      std::vector<double> out =
          apply_transform(codes[static_cast<std::size_t>(i)], x, obs, out_obs);
      for (Index t = 0; t < T; ++t) {
        const bool o = out_obs[static_cast<std::size_t>(t)];
        p.values(t, i) = o ? out[static_cast<std::size_t>(t)] : 0.0;
        p.mask(t, i) = o;
      }
    }
  }
  p.check();
  return p;
}

Panel load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("csv: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), options);
}

std::string format_csv(const Panel& p) {
  std::ostringstream out;
  out.precision(17);
  out << "date";
  for (Index i = 0; i < p.units(); ++i) {
    out << ',';
    if (static_cast<std::size_t>(i) < p.unit_names.size())
      out << p.unit_names[static_cast<std::size_t>(i)];
    else
      out << 'v' << (i + 1);
  }
  out << '\n';
  for (Index t = 0; t < p.periods(); ++t) {
    if (static_cast<std::size_t>(t) < p.time_index.size())
      out << p.time_index[static_cast<std::size_t>(t)];
    else
      out << (t + 1);
    for (Index i = 0; i < p.units(); ++i) {
      out << ',';
      if (p.mask(t, i))
        out << p.values(t, i);
      else
        out << "NA";
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const std::string& path, const Panel& p) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("csv: cannot write " + path);
  out << format_csv(p);
}

}  // namespace tpca
