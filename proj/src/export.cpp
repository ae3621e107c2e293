#include "dsco/export.hpp"

#include "dsco/material.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsco::io {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_convergence_csv(std::ostream& os, const std::vector<IterationRecord>& records) {
  os << "stage,iter,compliance,h_eta,volume,extra\n";
  for (const auto& r : records) {
    os << r.stage << ',' << r.iter << ',' << format_number(r.compliance) << ','
       << (r.h_eta ? format_number(*r.h_eta) : std::string()) << ',' << format_number(r.volume)
       << ',' << r.extra << '\n';
  }
}

namespace {

void check_design(const fem::Mesh& mesh, const DesignTable& d) {
  const auto N = static_cast<Eigen::Index>(mesh.element_count());
  if (d.rho.size() != N || d.theta.size() != N || d.filtered_theta.size() != N ||
      static_cast<Eigen::Index>(d.labels.size()) != N) {
    throw std::invalid_argument("design table does not match the mesh");
  }
}

}  // namespace

void write_design_csv(std::ostream& os, const fem::Mesh& mesh, const DesignTable& d) {
  check_design(mesh, d);
  os << "element,cx,cy,rho,theta_deg,theta_filtered_deg,label\n";
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto c = mesh.centroid(e);
    os << e << ',' << format_number(c.x()) << ',' << format_number(c.y()) << ','
       << format_number(d.rho(e)) << ',' << format_number(material::rad_to_deg(d.theta(e))) << ','
       << format_number(material::rad_to_deg(d.filtered_theta(e))) << ','
       << d.labels[static_cast<std::size_t>(e)] << '\n';
  }
}

void write_layout_svg(std::ostream& os, const fem::Mesh& mesh, const DesignTable& d,
                      double cell_px) {
  check_design(mesh, d);
  const double W = mesh.nx() * cell_px, H = mesh.ny() * cell_px;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(W) << "\" height=\""
     << format_number(H) << "\" viewBox=\"0 0 " << format_number(W) << ' ' << format_number(H)
     << "\">\n";
  char buf[256];
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    const double rho = std::clamp(d.rho(e), 0.0, 1.0);
    const int shade = static_cast<int>(std::lround(235.0 - 175.0 * rho));
    const double x = el.i * cell_px, y = H - (el.j + 1) * cell_px;
    std::snprintf(buf, sizeof buf,
                  "<g id=\"e%d\"><rect x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" height=\"%.4f\" "
                  "fill=\"rgb(%d,%d,%d)\"/>",
                  e, x, y, cell_px, cell_px, shade, shade, shade);
    os << buf;
    if (rho >= 0.5) {
      const double t = d.filtered_theta(e);
      const double half = 0.4 * cell_px;
      const double cx = x + 0.5 * cell_px, cy = y + 0.5 * cell_px;
      const double dx = half * std::cos(t), dy = -half * std::sin(t);
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%.4f\" y1=\"%.4f\" x2=\"%.4f\" y2=\"%.4f\" stroke=\"#d01c1c\" "
                    "stroke-width=\"%.4f\"/>",
                    cx - dx, cy - dy, cx + dx, cy + dy, 0.12 * cell_px);
      os << buf;
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dsco::io
