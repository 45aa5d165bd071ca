#pragma once

#include <string>
#include <vector>

namespace cellsearch {

struct FigureSeries {
  std::string id;
  std::vector<std::string> set;  // dotted overrides on top of the base config
};

struct FigureBundle {
  int which = 0;
  std::string title;
  std::vector<FigureSeries> series;
};

/// Scenario bundles for the four misdetection figures:
/// 3: analog/digital x omni/random TX plus 3-bit digital, single path.
/// 4: analog with N_slot in {25, 50, 100, 200} at fixed overhead.
/// 5: single path vs multipath for analog and digital.
/// 6: analog, 4-stream hybrid and digital over multipath.
/// Throws ConfigError for any other id.
FigureBundle figure_bundle(int which);

}  // namespace cellsearch
