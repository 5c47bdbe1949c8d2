#pragma once

#include <cstddef>
#include <functional>

namespace surfmeas {

/// Number of worker threads used by block-parallel loops. Changing it never
/// changes results: work is split into fixed blocks and reduced in block order.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Runs body(block) for every block in [0, blocks), distributing blocks over
/// the configured workers.
void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& body);

}  // namespace surfmeas
