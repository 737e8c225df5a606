#include "dcgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "dcgen/rng.hpp"

namespace dcgen {

DistinctStat distinct_n(const std::vector<TokenSeq>& responses, int n) {
  if (n != 1 && n != 2)
    throw std::invalid_argument("distinct_n: n must be 1 or 2");
  if (responses.empty())
    throw std::invalid_argument("distinct_n: no responses");
  std::unordered_set<std::string> types;
  long long total = 0;
  for (const auto& resp : responses) {
    if (static_cast<int>(resp.size()) < n) continue;
    for (std::size_t i = 0; i + n <= resp.size(); ++i) {
      if (n == 1) {
        types.insert(resp[i]);
      } else {
        types.insert(resp[i] + '\x1f' + resp[i + 1]);
      }
      ++total;
    }
  }
  if (total == 0)
    throw std::invalid_argument("distinct_n: response pool has no n-grams");
  DistinctStat stat;
  stat.types = static_cast<long long>(types.size());
  stat.ratio = static_cast<double>(stat.types) / static_cast<double>(total);
  return stat;
}

double bleu1(const std::vector<TokenSeq>& responses,
             const std::vector<TokenSeq>& references) {
  if (responses.empty())
    throw std::invalid_argument("bleu1: empty corpus");
  if (responses.size() != references.size())
    throw std::invalid_argument("bleu1: need one reference per response");
  long long matched = 0, hyp_len = 0, ref_len = 0;
  std::unordered_map<std::string, long long> ref_counts;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    ref_counts.clear();
    for (const auto& tok : references[i]) ++ref_counts[tok];
    for (const auto& tok : responses[i]) {
      auto it = ref_counts.find(tok);
      if (it != ref_counts.end() && it->second > 0) {
        ++matched;
        --it->second;
      }
    }
    hyp_len += static_cast<long long>(responses[i].size());
    ref_len += static_cast<long long>(references[i].size());
  }
  if (hyp_len == 0) return 0.0;
  double precision = static_cast<double>(matched) / static_cast<double>(hyp_len);
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) /
                                       static_cast<double>(hyp_len));
  return 100.0 * precision * bp;
}

double stopword_pct(const std::vector<TokenSeq>& responses,
                    const std::unordered_set<std::string>& stop_list) {
  if (stop_list.empty())
    throw std::invalid_argument("stopword_pct: empty stop list");
  long long stop = 0, total = 0;
  for (const auto& resp : responses) {
    for (const auto& tok : resp) {
      ++total;
      if (stop_list.count(tok)) ++stop;
    }
  }
  if (total == 0)
    throw std::invalid_argument("stopword_pct: zero tokens");
  return 100.0 * static_cast<double>(stop) / static_cast<double>(total);
}

double avg_len(const std::vector<TokenSeq>& responses) {
  if (responses.empty())
    throw std::invalid_argument("avg_len: no responses");
  long long total = 0;
  for (const auto& resp : responses) total += static_cast<long long>(resp.size());
  return static_cast<double>(total) / static_cast<double>(responses.size());
}

MetricsReport compute_report(const std::vector<TokenSeq>& responses,
                             const std::vector<TokenSeq>& references,
                             const std::unordered_set<std::string>& stop_list) {
  MetricsReport report;
  report.distinct1 = distinct_n(responses, 1);
  report.distinct2 = distinct_n(responses, 2);
  report.bleu1 = references.empty()
                     ? std::numeric_limits<double>::quiet_NaN()
                     : bleu1(responses, references);
  report.avg_len = avg_len(responses);
  report.stopword_pct = stopword_pct(responses, stop_list);
  return report;
}

double bootstrap_diff_test(std::span<const double> a, std::span<const double> b,
                           int iterations, std::uint64_t seed) {
  if (a.size() != b.size())
    throw std::invalid_argument("bootstrap_diff_test: unequal item counts");
  if (a.empty())
    throw std::invalid_argument("bootstrap_diff_test: no items");
  if (iterations < 1)
    throw std::invalid_argument("bootstrap_diff_test: iterations < 1");
  const std::size_t n = a.size();
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += a[i] - b[i];
  if (observed == 0.0) return 1.0;
  Rng rng(seed);
  long long contrary = 0;
  for (int it = 0; it < iterations; ++it) {
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t idx = rng.uniform_int(n);
      diff += a[idx] - b[idx];
    }
    if (diff == 0.0 || (diff > 0.0) != (observed > 0.0)) ++contrary;
  }
  double p = 2.0 * static_cast<double>(contrary) / static_cast<double>(iterations);
  return std::min(1.0, p);
}

std::vector<double> to_outcomes(const JudgmentCounts& counts) {
  if (counts.no < 0 || counts.unsure < 0 || counts.yes < 0)
    throw std::invalid_argument("to_outcomes: negative count");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(counts.total()));
  out.insert(out.end(), static_cast<std::size_t>(counts.no), 0.0);
  out.insert(out.end(), static_cast<std::size_t>(counts.unsure), 0.5);
  out.insert(out.end(), static_cast<std::size_t>(counts.yes), 1.0);
  return out;
}

double binomial_test(long long successes, long long trials, double p0) {
  if (trials <= 0)
    throw std::invalid_argument("binomial_test: trials must be positive");
  if (successes < 0 || successes > trials)
    throw std::invalid_argument("binomial_test: successes out of range");
  if (!(p0 > 0.0 && p0 < 1.0))
    throw std::invalid_argument("binomial_test: p0 must lie in (0,1)");
  const double n = static_cast<double>(trials);
  const double lp = std::log(p0), lq = std::log1p(-p0);
  auto log_pmf = [&](long long k) {
    double kd = static_cast<double>(k);
    return std::lgamma(n + 1.0) - std::lgamma(kd + 1.0) -
           std::lgamma(n - kd + 1.0) + kd * lp + (n - kd) * lq;
  };
  // Sum every outcome no more likely than the observed one; the slack keeps
  // equal-probability outcomes on the boundary included despite rounding.
  const double cutoff = log_pmf(successes) + 1e-7;
  double p = 0.0;
  for (long long k = 0; k <= trials; ++k) {
    double lpk = log_pmf(k);
    if (lpk <= cutoff) p += std::exp(lpk);
  }
  return std::min(1.0, p);
}

namespace {

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, value);
  return buf;
}

std::vector<std::string> report_cells(const MetricsReport& r) {
  std::vector<std::string> cells;
  cells.push_back(std::to_string(r.distinct1.types) + "/" +
                  fmt("%.3f", r.distinct1.ratio));
  cells.push_back(std::to_string(r.distinct2.types) + "/" +
                  fmt("%.3f", r.distinct2.ratio));
  cells.push_back(std::isnan(r.bleu1) ? std::string("-") : fmt("%.2f", r.bleu1));
  cells.push_back(fmt("%.1f", r.avg_len));
  cells.push_back(fmt("%.2f", r.stopword_pct));
  return cells;
}

}  // namespace

std::string format_report_table(const std::vector<std::string>& names,
                                const std::vector<MetricsReport>& reports) {
  if (names.size() != reports.size())
    throw std::invalid_argument("format_report_table: name/report mismatch");
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"system", "distinct-1", "distinct-2", "bleu-1", "avg-len",
                  "stopword-pct"});
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<std::string> row;
    row.push_back(names[i]);
    auto cells = report_cells(reports[i]);
    row.insert(row.end(), cells.begin(), cells.end());
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size())
        out.append(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string format_report_json(const std::vector<std::string>& names,
                               const std::vector<MetricsReport>& reports) {
  if (names.size() != reports.size())
    throw std::invalid_argument("format_report_json: name/report mismatch");
  nlohmann::ordered_json root;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    nlohmann::ordered_json entry;
    entry["distinct1"] = {{"types", r.distinct1.types}, {"ratio", r.distinct1.ratio}};
    entry["distinct2"] = {{"types", r.distinct2.types}, {"ratio", r.distinct2.ratio}};
    if (std::isnan(r.bleu1))
      entry["bleu1"] = nullptr;
    else
      entry["bleu1"] = r.bleu1;
    entry["avg_len"] = r.avg_len;
    entry["stopword_pct"] = r.stopword_pct;
    root[names[i]] = std::move(entry);
  }
  return root.dump(2);
}

}  // namespace dcgen
