#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "phonon/lab.hpp"

namespace phonon::lab {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<')
      o += "&lt;";
    else if (c == '>')
      o += "&gt;";
    else if (c == '&')
      o += "&amp;";
    else
      o += c;
  }
  return o;
}

}  // namespace

std::string trajectory_csv(const netsim::Trajectory& t) {
  std::string out = "t_ns,Pe_Q1,Pe_Q2,field_energy\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    out += fmt(t.times[k] * 1e9) + "," + fmt(t.pe_q1[k]) + "," + fmt(t.pe_q2[k]) + "," + fmt(t.field_energy[k]) + "\n";
  return out;
}

json complex_matrix_json(const qmath::Mat& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    j.push_back(row);
  }
  return j;
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series) {
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << esc(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << esc(xlabel) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << esc(ylabel) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    o << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << fmt(xv) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv)
      << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* col = colors[k % 5];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 16 * double(k) << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
      << col << "\">" << esc(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string report_summary(const std::filesystem::path& dir) {
  auto path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw FilesystemError("no " + std::string(kManifestName) + " in " + dir.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FilesystemError(path.string() + " is unreadable: " + e.what());
  }
  std::ostringstream o;
  o << "scenario: " << m.value("scenario", std::string("?")) << "\n";
  std::size_t w = 6;
  const json metrics = m.value("metrics", json::object());
  for (auto it = metrics.begin(); it != metrics.end(); ++it) w = std::max(w, it.key().size());
  for (auto it = metrics.begin(); it != metrics.end(); ++it) {
    std::string key = it.key();
    key.resize(w, ' ');
    const json& v = it.value();
    std::string val = v.contains("value") && v["value"].is_number() ? fmt(v["value"].get<double>()) : v.dump();
    o << key << "  " << val;
    if (v.contains("definition")) o << "  (" << v["definition"].get<std::string>() << ")";
    o << "\n";
  }
  return o.str();
}

}  // namespace phonon::lab
