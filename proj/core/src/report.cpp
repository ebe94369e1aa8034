#include "ssgait/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ssgait/errors.hpp"

namespace ssgait {

namespace {

std::string pct(double frac) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * frac);
  return buf;
}

void render_text(const EvalMatrix& m, TableLayout layout, std::ostringstream& os) {
  os << "[" << condition_name(m.cond)
     << "] rank-1 by probe view (%), gallery views pooled\n";
  if (m.present_cells == 0) {
    os << "  (no comparable view pairs; every cell excluded)\n";
  } else if (layout == TableLayout::ViewColumns) {
    os << "  probe ";
    for (int v : m.probe_views) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%6d", v);
      os << buf;
    }
    os << "    mean\n";
    os << "        ";
    for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
      const double v = m.probe_view_mean[pi];
      os << " " << (std::isnan(v) ? std::string("    -") : pct(v));
    }
    os << "   " << pct(m.grand_mean) << "\n";
  } else {
    os << "  probe   rank-1\n";
    for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%7d", m.probe_views[pi]);
      const double v = m.probe_view_mean[pi];
      os << buf << "  " << (std::isnan(v) ? std::string("    -") : pct(v)) << "\n";
    }
    os << "   mean  " << pct(m.grand_mean) << "\n";
  }
  for (const std::string& w : m.warnings) os << "  note: " << w << "\n";
  os << "\n";
}

}  // namespace

Report render_report(const std::vector<EvalMatrix>& matrices, TableLayout layout) {
  if (matrices.empty()) throw NotEnoughData("nothing to report");
  Report r;
  std::ostringstream text;
  std::ostringstream csv;
  csv << "condition,probe_view,gallery_view,accuracy,attempts,hits\n";
  for (const EvalMatrix& m : matrices) {
    render_text(m, layout, text);
    for (size_t pi = 0; pi < m.probe_views.size(); ++pi) {
      for (size_t gi = 0; gi < m.gallery_views.size(); ++gi) {
        const EvalCell& c = m.grid[pi][gi];
        csv << condition_name(m.cond) << "," << m.probe_views[pi] << ","
            << m.gallery_views[gi] << ",";
        if (c.present) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.10g", c.acc);
          csv << buf;
        }
        csv << "," << c.attempts << "," << c.hits << "\n";
      }
    }
  }
  r.text = text.str();
  r.csv = csv.str();
  return r;
}

}  // namespace ssgait
