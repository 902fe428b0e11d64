/*
Copyright 2026 The Zipper Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef ZIPPER_OPTIMIZER_HPP
#define ZIPPER_OPTIMIZER_HPP

#include <cstddef>
#include <string>

#include "zipper/ir.hpp"

namespace zipper {

struct PassReport {
  std::size_t moved = 0;             // ops moved from edge to vertex segments
  std::size_t pruned = 0;            // ops removed as dead
  std::size_t channels_added = 0;
  std::size_t channels_removed = 0;
  std::size_t segments_removed = 0;

  PassReport& operator+=(const PassReport& o);
  std::string to_json() const;
};

/// Moves chains of edge-side ops that read only one endpoint's data into the
/// vertex segment producing that data.
IrProgram e2v(const IrProgram& p, PassReport* report = nullptr);

/// Removes ops that cannot reach an output marker, following channels across
/// segments, then drops emptied segments and unused channels.
IrProgram prune_dead(const IrProgram& p, PassReport* report = nullptr);

/// Removes ops whose flag is zero and renumbers operands. Every kept op must
/// only read kept ops.
void compact_segment(Segment& seg, const std::vector<char>& keep);

}  // namespace zipper

#endif  // ZIPPER_OPTIMIZER_HPP
