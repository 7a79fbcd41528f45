#include "maldyn/predict.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/parallel.hpp"

namespace maldyn {

std::array<std::pair<int, int>, 4> scheme_boundaries(std::string_view scheme) {
  if (scheme == "7:1:1:1") return {{{2009, 2015}, {2016, 2016}, {2017, 2017}, {2018, 2018}}};
  if (scheme == "4:2:2:2") return {{{2009, 2012}, {2013, 2014}, {2015, 2016}, {2017, 2018}}};
  throw Error(ErrorCode::UnknownScheme, "unknown partition scheme '" + std::string(scheme) + "'");
}

TimePartition partition_by_year(const Manifest& manifest, std::string_view scheme) {
  TimePartition out;
  out.scheme = std::string(scheme);
  out.year_boundaries = scheme_boundaries(scheme);
  std::vector<std::string> rejected;
  for (const auto& e : manifest.entries) {
    if (e.generated || e.label == Label::Benign) continue;
    if (!e.year || *e.year < 2009 || *e.year > 2018) {
      rejected.push_back(e.sample_id + (e.year ? "(" + std::to_string(*e.year) + ")" : "(no year)"));
      continue;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      if (*e.year >= out.year_boundaries[i].first && *e.year <= out.year_boundaries[i].second) {
        out.parts[i].push_back(e.sample_id);
        break;
      }
    }
  }
  if (!rejected.empty()) {
    std::string list;
    for (std::size_t i = 0; i < rejected.size() && i < 20; ++i) list += (i ? ", " : "") + rejected[i];
    if (rejected.size() > 20) list += ", ...";
    throw Error(ErrorCode::UndatedSample,
                std::to_string(rejected.size()) + " sample(s) lack a year in [2009, 2018]: " + list);
  }
  return out;
}

BestMatch max_similarity(const SampleProfile& ti, std::span<const SampleProfile> g, SimilarityMode mode,
                         const SimilarityConfig& config) {
  if (g.empty()) throw Error(ErrorCode::EmptyGeneratedSet, "generated set is empty");
  BestMatch best{0, similarity(ti, g[0], mode, config)};
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double s = similarity(ti, g[j], mode, config);
    if (s > best.value) best = {j, s};
  }
  return best;
}

std::vector<double> default_thresholds() { return {0.15, 0.2, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95}; }

std::vector<double> CoverageReport::rates(std::string_view partition) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.partition == partition) out.push_back(r.rate);
  return out;
}

std::vector<BestMatch> best_matches(std::span<const SampleProfile> t, std::span<const SampleProfile> g,
                                    SimilarityMode mode, const SimilarityConfig& config, unsigned jobs) {
  if (g.empty()) throw Error(ErrorCode::EmptyGeneratedSet, "generated set is empty");
  std::vector<BestMatch> out(t.size());
  parallel_for(t.size(), jobs, [&](std::size_t i) { out[i] = max_similarity(t[i], g, mode, config); });
  return out;
}

std::vector<CoverageRow> coverage_rows(std::span<const BestMatch> best, std::span<const double> thresholds,
                                       std::string_view partition) {
  if (best.empty()) throw Error(ErrorCode::EmptyData, "partition '" + std::string(partition) + "' is empty");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw Error(ErrorCode::InvalidArgument, "thresholds must be sorted ascending");
  std::vector<CoverageRow> rows;
  for (double thr : thresholds) {
    CoverageRow row{std::string(partition), thr, 0, best.size(), 0.0};
    for (const auto& b : best)
      if (b.value >= thr) ++row.covered;
    row.rate = static_cast<double>(row.covered) / static_cast<double>(row.total);
    if (!rows.empty() && row.rate > rows.back().rate) throw std::logic_error("coverage rate increased with threshold");
    rows.push_back(row);
  }
  return rows;
}

CoverageReport coverage(std::span<const std::pair<std::string, std::vector<SampleProfile>>> partitions,
                        std::span<const SampleProfile> g, std::span<const double> thresholds, SimilarityMode mode,
                        const SimilarityConfig& config, unsigned jobs) {
  if (g.empty()) throw Error(ErrorCode::EmptyGeneratedSet, "generated set is empty");
  CoverageReport report;
  report.mode = mode;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  for (const auto& [name, samples] : partitions) {
    if (samples.empty()) throw Error(ErrorCode::EmptyData, "partition '" + name + "' is empty");
    const auto best = best_matches(samples, g, mode, config, jobs);
    auto rows = coverage_rows(best, thresholds, name);
    report.partitions.push_back(name);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    for (std::size_t i = 0; i < samples.size(); ++i) report.matches.push_back({samples[i].sample_id, name, best[i]});
  }
  return report;
}

std::string coverage_long_csv(std::span<const CoverageReport> reports) {
  std::string out = "mode,threshold,partition,covered,total,rate\n";
  for (const auto& rep : reports)
    for (const auto& r : rep.rows)
      out += std::string(to_string(rep.mode)) + "," + io::format_real(r.threshold) + "," + io::csv_cell(r.partition) +
             "," + std::to_string(r.covered) + "," + std::to_string(r.total) + "," + io::format_real(r.rate) + "\n";
  return out;
}

std::string coverage_wide_csv(const CoverageReport& report) {
  std::string out = "threshold";
  for (const auto& p : report.partitions) out += ",P(" + p + ")";
  out += "\n";
  std::vector<std::vector<double>> columns;
  for (const auto& p : report.partitions) columns.push_back(report.rates(p));
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    out += io::format_real(report.thresholds[t]);
    for (const auto& c : columns) out += "," + io::format_real(c[t]);
    out += "\n";
  }
  return out;
}

std::string coverage_svg(const CoverageReport& report) {
  constexpr double width = 480, height = 320, margin = 40;
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  auto x_of = [&](double thr) { return margin + thr * (width - 2 * margin); };
  auto y_of = [&](double rate) { return height - margin - rate * (height - 2 * margin); };
  char buf[160];
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" viewBox=\"0 0 480 320\">\n";
  out += "<title>coverage (" + std::string(to_string(report.mode)) + ")</title>\n";
  std::snprintf(buf, sizeof buf, "<path d=\"M%.1f %.1f V%.1f H%.1f\" fill=\"none\" stroke=\"#000\"/>\n", margin, margin,
                height - margin, width - margin);
  out += buf;
  for (double tick : {0.0, 0.5, 1.0}) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%.1f</text>\n", x_of(tick) - 6,
                  height - margin + 14, tick);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%.1f</text>\n", margin - 24,
                  y_of(tick) + 3, tick);
    out += buf;
  }
  for (std::size_t p = 0; p < report.partitions.size(); ++p) {
    const auto rates = report.rates(report.partitions[p]);
    std::string points;
    for (std::size_t t = 0; t < rates.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", t ? " " : "", x_of(report.thresholds[t]), y_of(rates[t]));
      points += buf;
    }
    const char* colour = colours[p % 5];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + points +
           "\"><title>" + report.partitions[p] + "</title></polyline>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                  width - margin - 30, margin + 14.0 * static_cast<double>(p), colour, report.partitions[p].c_str());
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::filesystem::path> coverage_curve_report(std::span<const CoverageReport> reports,
                                                         const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& p, const std::string& bytes) {
    io::write_file(p, bytes);
    written.push_back(p);
  };
  emit(out_dir / "coverage.csv", coverage_long_csv(reports));
  for (const auto& rep : reports) {
    const std::string mode(to_string(rep.mode));
    emit(out_dir / ("coverage_" + mode + ".csv"), coverage_wide_csv(rep));
    emit(out_dir / ("coverage_" + mode + ".svg"), coverage_svg(rep));
  }
  return written;
}

}  // namespace maldyn
