// Copyright 2026 The rappi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace rappi {

// Calls fn(chunk, begin, end) for every chunk of [0, n). Chunk boundaries
// depend only on n and chunk_size, so any reduction performed per chunk and
// then combined in chunk order is identical for every thread count.
void for_each_chunk(std::size_t n, std::size_t chunk_size, int threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

// Resolves a requested thread count; values <= 0 mean "all hardware threads".
int resolve_threads(int requested);

}  // namespace rappi
