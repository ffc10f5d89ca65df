#include "cdcnn/eval.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "cdcnn/errors.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn {

std::vector<double> precision_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 50; ++i) t.push_back(static_cast<double>(i));
  return t;
}

std::vector<double> success_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 20; ++i) t.push_back(static_cast<double>(i) / 20.0);
  return t;
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidInput(std::string(what) + ": " + std::to_string(a) + " results vs " + std::to_string(b) +
                       " ground-truth boxes");
  }
  if (a == 0) throw InvalidInput(std::string(what) + ": no frames");
}

}  // namespace

Curve precision_curve(std::span<const BBox> results, std::span<const BBox> groundtruth,
                      const std::vector<double>& thresholds) {
  require_same_length(results.size(), groundtruth.size(), "precision_curve");
  std::vector<double> errors;
  errors.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) errors.push_back(center_distance(results[i], groundtruth[i]));
  Curve c{"precision", thresholds, {}};
  for (double tau : thresholds) {
    std::size_t hit = 0;
    for (double e : errors) hit += e <= tau ? 1 : 0;
    c.values.push_back(static_cast<double>(hit) / static_cast<double>(errors.size()));
  }
  return c;
}

Curve success_curve(std::span<const BBox> results, std::span<const BBox> groundtruth,
                    const std::vector<double>& thresholds) {
  require_same_length(results.size(), groundtruth.size(), "success_curve");
  std::vector<double> overlaps;
  overlaps.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) overlaps.push_back(iou(results[i], groundtruth[i]));
  Curve c{"success", thresholds, {}};
  for (double tau : thresholds) {
    std::size_t hit = 0;
    for (double o : overlaps) hit += o > tau ? 1 : 0;
    c.values.push_back(static_cast<double>(hit) / static_cast<double>(overlaps.size()));
  }
  return c;
}

double auc(const Curve& curve) {
  if (curve.values.empty()) throw InvalidInput("auc: empty curve");
  double sum = 0.0;
  for (double v : curve.values) sum += v;
  return sum / static_cast<double>(curve.values.size());
}

double value_at(const Curve& curve, double threshold) {
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    if (curve.thresholds[i] == threshold) return curve.values[i];
  }
  throw InvalidInput("value_at: threshold " + format_double(threshold) + " not on the curve grid");
}

Curve mean_curve(std::span<const Curve> curves, std::string name) {
  if (curves.empty()) throw InvalidInput("mean_curve: no curves");
  Curve out{std::move(name), curves.front().thresholds, std::vector<double>(curves.front().values.size(), 0.0)};
  for (const Curve& c : curves) {
    if (c.thresholds != out.thresholds) throw InvalidInput("mean_curve: threshold grids differ");
    for (std::size_t i = 0; i < c.values.size(); ++i) out.values[i] += c.values[i];
  }
  for (double& v : out.values) v /= static_cast<double>(curves.size());
  return out;
}

SequenceEval evaluate_track(std::span<const TrackRecord> records, const Sequence& sequence,
                            const std::string& tracker) {
  std::vector<BBox> res;
  std::vector<BBox> gt;
  for (const auto& r : records) {
    if (r.frame == 1) continue;
    if (r.frame < 1 || static_cast<std::size_t>(r.frame) > sequence.length()) {
      throw InvalidInput("evaluate_track: frame " + std::to_string(r.frame) + " outside sequence '" +
                         sequence.name + "'");
    }
    res.push_back(r.box);
    gt.push_back(sequence.groundtruth[static_cast<std::size_t>(r.frame - 1)]);
  }
  if (res.size() + 1 != sequence.length()) {
    throw InvalidInput("evaluate_track: expected " + std::to_string(sequence.length() - 1) + " tracked frames for '" +
                       sequence.name + "', got " + std::to_string(res.size()));
  }
  SequenceEval ev;
  ev.tracker = tracker;
  ev.sequence = sequence.name;
  ev.precision = precision_curve(res, gt);
  ev.success = success_curve(res, gt);
  ev.precision.name = tracker;
  ev.success.name = tracker;
  ev.prec20 = value_at(ev.precision, 20.0);
  ev.auc = auc(ev.success);
  return ev;
}

std::string curve_csv(const Curve& curve) {
  std::string out = "threshold,value\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    out += format_double(curve.thresholds[i]) + "," + format_double(curve.values[i]) + "\n";
  }
  return out;
}

Curve parse_curve_csv(const std::string& text, std::string name) {
  Curve c;
  c.name = std::move(name);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || trim(line).empty()) continue;
    const std::string ctx = "curve CSV line " + std::to_string(line_no);
    const auto f = split(trim(line), ',');
    if (f.size() != 2) throw FormatError(ctx + ": expected 2 fields");
    c.thresholds.push_back(parse_double(f[0], ctx));
    c.values.push_back(parse_double(f[1], ctx));
  }
  return c;
}

namespace {

std::string fixed(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette{"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string svg_plot(std::span<const Curve> curves, const std::string& title, const std::string& x_label,
                     const std::string& y_label) {
  if (curves.empty()) throw InvalidInput("svg_plot: no curves");
  constexpr double kW = 520, kH = 380, kLeft = 60, kRight = 160, kTop = 40, kBottom = 50;
  double x_min = curves.front().thresholds.front();
  double x_max = x_min;
  for (const Curve& c : curves) {
    if (c.thresholds.empty() || c.thresholds.size() != c.values.size()) {
      throw InvalidInput("svg_plot: malformed curve '" + c.name + "'");
    }
    for (double t : c.thresholds) {
      x_min = std::min(x_min, t);
      x_max = std::max(x_max, t);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - y) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fy = i / 5.0;
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(sy(fy)) << "\" x2=\"" << fixed(kLeft + pw) << "\" y2=\""
        << fixed(sy(fy)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(fy) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(fy) << "</text>\n";
    svg << "<text x=\"" << fixed(sx(fx)) << "\" y=\"" << fixed(kTop + ph + 16)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fixed(fx) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kH - 10)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << fixed(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << fixed(kTop + ph / 2) << ")\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Curve& c = curves[i];
    const char* color = kPalette[i % kPalette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < c.values.size(); ++j) {
      if (j) svg << ' ';
      svg << fixed(sx(c.thresholds[j])) << ',' << fixed(sy(c.values[j]));
    }
    svg << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << fixed(kLeft + pw + 10) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(kLeft + pw + 30)
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fixed(kLeft + pw + 36) << "\" y=\"" << fixed(ly + 4) << "\" font-size=\"11\">"
        << escape_xml(c.name) << " [" << fixed(auc(c)) << "]</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plots(std::span<const Curve> curves, const std::filesystem::path& dir, const std::string& stem,
                const std::string& title, const std::string& x_label, const std::string& y_label) {
  if (curves.empty()) throw InvalidInput("emit_plots: no curves");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  const std::string svg = svg_plot(curves, title, x_label, y_label);
  for (const Curve& c : curves) write_text_file(dir / (stem + "_" + c.name + ".csv"), curve_csv(c));
  write_text_file(dir / (stem + ".svg"), svg);
}

std::string score_table_csv(std::span<const SequenceEval> rows) {
  std::string out = "tracker,sequence,prec@20,auc\n";
  for (const auto& r : rows) {
    out += r.tracker + "," + r.sequence + "," + format_double(r.prec20) + "," + format_double(r.auc) + "\n";
  }
  return out;
}

}  // namespace cdcnn
