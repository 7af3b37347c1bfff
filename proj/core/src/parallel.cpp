#include "hik/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace hik {

namespace {
std::atomic<int> g_threads{0};
}

void set_num_threads(int n) { g_threads.store(std::max(0, n)); }

int num_threads() {
    const int n = g_threads.load();
    if (n > 0)
        return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Index begin, Index end, Index grain, const std::function<void(Index, Index)>& fn) {
    const Index total = end - begin;
    if (total <= 0)
        return;
    grain = std::max<Index>(1, grain);
    const Index chunks = (total + grain - 1) / grain;
    const Index workers = std::min<Index>(num_threads(), chunks);
    if (workers <= 1) {
        for (Index b = begin; b < end; b += grain)
            fn(b, std::min(end, b + grain));
        return;
    }
    std::atomic<Index> next{0};
    auto work = [&] {
        for (Index c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            const Index b = begin + c * grain;
            fn(b, std::min(end, b + grain));
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (Index t = 1; t < workers; ++t)
        pool.emplace_back(work);
    work();
}

} // namespace hik
