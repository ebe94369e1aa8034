#pragma once

#include <string>
#include <vector>

#include "ssgait/evaluate.hpp"

namespace ssgait {

// Text layout: view-major columns (one row per condition block) or one row
// per probe view (long view lists).
enum class TableLayout { ViewColumns, ViewRows };

struct Report {
  std::string text;
  std::string csv;  // condition, probe_view, gallery_view, accuracy, attempts, hits
};

Report render_report(const std::vector<EvalMatrix>& matrices, TableLayout layout);

}  // namespace ssgait
