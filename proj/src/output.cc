#include "foldctl/output.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "foldctl/errors.h"

namespace foldctl {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("failed writing '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& traj, int n_s, int m) {
  std::string out = "time";
  for (int i = 1; i <= n_s; ++i) out += ",x" + std::to_string(i);
  out += ",z";
  for (int k = 1; k <= m; ++k) out += ",u" + std::to_string(k);
  out += ",V\n";
  const bool has_inputs = !traj.inputs.empty();
  const bool has_v = !traj.lyapunov.empty();
  for (size_t i = 0; i < traj.size(); ++i) {
    out += format_number(traj.times[i]);
    for (int j = 0; j <= n_s; ++j) out += "," + format_number(traj.states[i][j]);
    for (int k = 0; k < m; ++k) out += "," + format_number(has_inputs ? traj.inputs[i][k] : 0.0);
    out += ",";
    if (has_v) out += format_number(traj.lyapunov[i]);
    out += "\n";
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out =
      "eps,ic,converged,terminal,time_to_ball,s_to_ball,final_time,final_norm,peak_input,"
      "lyapunov_decreasing,error\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : result.rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '"', '\'');
    out += format_number(r.eps) + "," + std::to_string(r.ic_index) + "," +
           (r.converged ? "true" : "false") + "," + to_string(r.terminal) + "," +
           opt(r.time_to_ball) + "," + opt(r.s_to_ball) + "," + format_number(r.final_time) +
           "," + format_number(r.final_norm) + "," + format_number(r.peak_input) + ",";
    if (r.lyapunov_decreasing) out += *r.lyapunov_decreasing ? "true" : "false";
    out += "," + (error.empty() ? std::string() : "\"" + error + "\"") + "\n";
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<double>& x, const std::vector<PlotSeries>& series,
                           bool log_y) {
  constexpr double kWidth = 720, kHeight = 420;
  constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  auto transform = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (double t : x) {
    if (!std::isfinite(t)) continue;
    x_lo = std::min(x_lo, t);
    x_hi = std::max(x_hi, t);
  }
  for (const auto& s : series) {
    for (double v : s.values) {
      if (!usable(v)) continue;
      y_lo = std::min(y_lo, transform(v));
      y_hi = std::max(y_hi, transform(v));
    }
  }
  if (!(x_hi > x_lo)) { x_lo = std::isfinite(x_lo) ? x_lo - 1 : 0; x_hi = x_lo + 2; }
  if (!(y_hi > y_lo)) { y_lo = std::isfinite(y_lo) ? y_lo - 1 : 0; y_hi = y_lo + 2; }

  auto px = [&](double t) { return kLeft + (t - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double v) { return kTop + (y_hi - v) / (y_hi - y_lo) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double tx = x_lo + (x_hi - x_lo) * i / 4.0;
    const double ty = y_lo + (y_hi - y_lo) * i / 4.0;
    os << "<text x=\"" << px(tx) << "\" y=\"" << kTop + plot_h + 16
       << "\" text-anchor=\"middle\">" << tick(tx) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(ty) + 4 << "\" text-anchor=\"end\">"
       << (log_y ? "1e" + tick(ty) : tick(ty)) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const size_t n = std::min(x.size(), series[s].values.size());
    // Thin long series so the file stays small.
    const size_t stride = std::max<size_t>(1, n / 2000);
    for (size_t i = 0; i < n; i += stride) {
      const double v = series[s].values[i];
      if (!usable(v) || !std::isfinite(x[i])) continue;
      os << px(x[i]) << "," << py(transform(v)) << " ";
    }
    if (n > 0 && (n - 1) % stride != 0 && usable(series[s].values[n - 1])) {
      os << px(x[n - 1]) << "," << py(transform(series[s].values[n - 1]));
    }
    os << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    os << "<line x1=\"" << kLeft + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
       << kLeft + plot_w + 32 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + plot_w + 38 << "\" y=\"" << ly + 4 << "\">"
       << escape_xml(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace foldctl
