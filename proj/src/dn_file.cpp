#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qglat/dn_maps.hpp"
#include "qglat/errors.hpp"
#include "qglat/tolerances.hpp"

namespace qglat {

namespace {

using nlohmann::json;

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_dn_file(const std::string& path, const DNSampleFile& file) {
  if (file.lambdas.size() != file.matrices.size())
    throw SchemaError("write_dn_file: lambda/matrix count mismatch");
  if (file.payload != "csv" && file.payload != "binary")
    throw SchemaError("write_dn_file: payload must be csv or binary");
  const int M = 4 * (file.N + 1);
  for (const auto& mat : file.matrices) {
    if (mat.rows() != M || mat.cols() != M)
      throw SchemaError("write_dn_file: matrix size does not match N");
  }

  json dropped = json::array();
  for (const auto& [lam, reason] : file.dropped)
    dropped.push_back({{"lambda", lam}, {"reason", reason}});
  const json header = {
      {"format", "qglat-dn"},
      {"version", 1},
      {"kind", "edge_dn"},
      {"N", file.N},
      {"M", M},
      {"payload", file.payload},
      {"samples", file.lambdas.size()},
      {"order", "rows/cols T,B,L,R with m ascending; entries row-major"},
      {"endianness", "little"},
      {"dropped", dropped},
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("write_dn_file: cannot open " + path);
  out << header.dump() << "\n";

  if (file.payload == "csv") {
    for (std::size_t s = 0; s < file.lambdas.size(); ++s) {
      out << format_g17(file.lambdas[s]);
      const auto& mat = file.matrices[s];
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) out << ',' << format_g17(mat(i, j));
      out << '\n';
    }
  } else {
    for (std::size_t s = 0; s < file.lambdas.size(); ++s) {
      out.write(reinterpret_cast<const char*>(&file.lambdas[s]), sizeof(double));
      const auto& mat = file.matrices[s];
      for (int i = 0; i < M; ++i)
        out.write(reinterpret_cast<const char*>(mat.row(i).eval().data()),
                  M * sizeof(double));
    }
  }
  if (!out) throw SchemaError("write_dn_file: write failed for " + path);
}

DNSampleFile read_dn_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("read_dn_file: cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    throw SchemaError("read_dn_file: missing header line");

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& err) {
    throw SchemaError(std::string("read_dn_file: bad header: ") + err.what());
  }
  if (header.value("format", "") != "qglat-dn" ||
      header.value("kind", "") != "edge_dn")
    throw SchemaError("read_dn_file: not a qglat edge D-N sample file");

  DNSampleFile file;
  file.N = header.value("N", -1);
  file.payload = header.value("payload", "");
  const int M = header.value("M", -1);
  const std::size_t samples = header.value("samples", std::size_t{0});
  if (file.N < 0 || M != 4 * (file.N + 1))
    throw SchemaError("read_dn_file: inconsistent N/M in header");
  if (file.payload != "csv" && file.payload != "binary")
    throw SchemaError("read_dn_file: unknown payload kind");
  for (const auto& item : header.value("dropped", json::array()))
    file.dropped.emplace_back(item.value("lambda", 0.0),
                              item.value("reason", ""));

  file.lambdas.reserve(samples);
  file.matrices.reserve(samples);
  if (file.payload == "csv") {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string tok;
      if (!std::getline(ss, tok, ','))
        throw SchemaError("read_dn_file: bad csv row");
      file.lambdas.push_back(std::strtod(tok.c_str(), nullptr));
      Eigen::MatrixXd mat(M, M);
      for (int i = 0; i < M; ++i) {
        for (int j = 0; j < M; ++j) {
          if (!std::getline(ss, tok, ','))
            throw SchemaError("read_dn_file: truncated csv row");
          mat(i, j) = std::strtod(tok.c_str(), nullptr);
        }
      }
      file.matrices.push_back(std::move(mat));
    }
  } else {
    for (std::size_t s = 0; s < samples; ++s) {
      double lam = 0.0;
      if (!in.read(reinterpret_cast<char*>(&lam), sizeof(double)))
        throw SchemaError("read_dn_file: truncated binary payload");
      Eigen::MatrixXd mat(M, M);
      for (int i = 0; i < M; ++i) {
        Eigen::VectorXd row(M);
        if (!in.read(reinterpret_cast<char*>(row.data()), M * sizeof(double)))
          throw SchemaError("read_dn_file: truncated binary payload");
        mat.row(i) = row;
      }
      file.lambdas.push_back(lam);
      file.matrices.push_back(std::move(mat));
    }
  }
  if (file.lambdas.size() != samples)
    throw SchemaError("read_dn_file: sample count mismatch (truncated file?)");
  if (!std::is_sorted(file.lambdas.begin(), file.lambdas.end()))
    throw SchemaError("read_dn_file: lambda grid not ascending");
  return file;
}

SampledOracle::SampledOracle(DNSampleFile file) : file_(std::move(file)) {
  const auto& xs = file_.lambdas;
  if (xs.size() < 2)
    throw SchemaError("SampledOracle: need at least two samples");

  // Contiguous runs: split where the spacing jumps well above the median
  // (admissibility gaps around the exceptional set).
  std::vector<double> gaps;
  gaps.reserve(xs.size() - 1);
  for (std::size_t i = 1; i < xs.size(); ++i) gaps.push_back(xs[i] - xs[i - 1]);
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double split = 2.5 * std::max(median, 1e-12);

  int first = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (gaps[i - 1] > split) {
      runs_.emplace_back(first, static_cast<int>(i) - 1);
      first = static_cast<int>(i);
    }
  }
  runs_.emplace_back(first, static_cast<int>(xs.size()) - 1);

  // Runs too short for a full stencil serve badly near the exclusion zones
  // that created them; refuse queries there unless nothing longer exists.
  std::vector<std::pair<int, int>> long_runs;
  for (const auto& run : runs_)
    if (run.second - run.first + 1 >= 8) long_runs.push_back(run);
  if (!long_runs.empty()) runs_ = std::move(long_runs);
}

int SampledOracle::run_containing(double lambda) const {
  for (std::size_t r = 0; r < runs_.size(); ++r) {
    const auto [a, b] = runs_[r];
    if (lambda >= file_.lambdas[a] && lambda <= file_.lambdas[b])
      return static_cast<int>(r);
  }
  return -1;
}

DNMatrix SampledOracle::edge_dn(double lambda, OracleQuery) const {
  // Interpolation coverage is the gate for both query kinds.
  const int r = run_containing(lambda);
  if (r < 0)
    throw NumericalError(ErrorCode::InsufficientGrid,
                         "SampledOracle: lambda = " + std::to_string(lambda) +
                             " outside the stored admissible grid");
  const auto [first, last] = runs_[r];
  const auto& xs = file_.lambdas;

  // Stencil of up to 8 nearest stored nodes inside the run.
  const int run_len = last - first + 1;
  const int stencil = std::min(8, run_len);
  auto it = std::lower_bound(xs.begin() + first, xs.begin() + last + 1, lambda);
  int hi = static_cast<int>(it - xs.begin());
  int lo = hi - 1;
  while (hi - lo - 1 < stencil) {
    if (lo >= first && (hi > last || lambda - xs[lo] <= xs[hi] - lambda)) {
      --lo;
    } else {
      ++hi;
    }
  }
  const int start = lo + 1;

  // Exact node hit: return the stored sample bit-for-bit.
  for (int i = start; i < start + stencil; ++i) {
    if (xs[i] == lambda) return {lambda, file_.matrices[i]};
  }

  // Barycentric weights on the stencil nodes.
  Eigen::VectorXd w(stencil);
  for (int i = 0; i < stencil; ++i) {
    double prod = 1.0;
    for (int j = 0; j < stencil; ++j) {
      if (j != i) prod *= (xs[start + i] - xs[start + j]);
    }
    w[i] = 1.0 / prod;
  }
  const int M = 4 * (file_.N + 1);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(M, M);
  double denom = 0.0;
  for (int i = 0; i < stencil; ++i) {
    const double c = w[i] / (lambda - xs[start + i]);
    acc += c * file_.matrices[start + i];
    denom += c;
  }
  return {lambda, acc / denom};
}

std::vector<double> SampledOracle::admissible_grid(double lo, double hi,
                                                   int count) const {
  std::vector<double> in_window;
  for (double lam : file_.lambdas)
    if (lam >= lo && lam <= hi) in_window.push_back(lam);
  if (static_cast<int>(in_window.size()) <= count) return in_window;
  std::vector<double> out;
  out.reserve(count);
  const double stride =
      static_cast<double>(in_window.size() - 1) / std::max(1, count - 1);
  for (int i = 0; i < count; ++i)
    out.push_back(in_window[static_cast<std::size_t>(std::lround(i * stride))]);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace qglat
