#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "shev/errors.hpp"
#include "shev/mompc.hpp"

namespace shev {

std::vector<std::array<double, 3>> simplex_grid(int count)
{
    if (count < 1) {
        throw ValidationError("weight grid size must be at least 1");
    }
    if (count == 1) {
        return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    }
    // Smallest lattice {i/h, j/h, (h-i-j)/h} with at least `count` points.
    int h = 1;
    while ((h + 1) * (h + 2) / 2 < count) {
        ++h;
    }
    std::vector<std::array<double, 3>> lattice;
    for (int i = h; i >= 0; --i) {
        for (int j = h - i; j >= 0; --j) {
            const int k = h - i - j;
            lattice.push_back({static_cast<double>(i) / h, static_cast<double>(j) / h,
                               static_cast<double>(k) / h});
        }
    }
    // Vertices first so every grid keeps the single-objective extremes.
    std::stable_partition(lattice.begin(), lattice.end(), [](const auto& w) {
        return std::count(w.begin(), w.end(), 1.0) == 1;
    });
    lattice.resize(static_cast<std::size_t>(count));
    return lattice;
}

void mark_dominated(std::vector<ParetoPoint>& points)
{
    for (auto& p : points) {
        p.dominated = false;
        for (const auto& q : points) {
            const bool weakly = q.motion_cost <= p.motion_cost && q.energy_cost <= p.energy_cost;
            const bool strictly = q.motion_cost < p.motion_cost || q.energy_cost < p.energy_cost;
            if (weakly && strictly) {
                p.dominated = true;
                break;
            }
        }
    }
}

std::vector<ParetoPoint> pareto_sweep(const VehicleState& state, double soc, const PreviewWindow& window,
                                      std::span<const std::array<double, 3>> weight_grid,
                                      const MompcConfig& cfg, const ShevParams& params, int jobs)
{
    std::vector<std::array<double, 3>> unique;
    for (const auto& w : weight_grid) {
        double sum = 0.0;
        for (double a : w) {
            if (!(a >= 0.0)) {
                throw ValidationError("weight triples must be non-negative");
            }
            sum += a;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("weight triples must sum to 1");
        }
        if (std::find(unique.begin(), unique.end(), w) == unique.end()) {
            unique.push_back(w);
        }
    }

    std::vector<ParetoPoint> points(unique.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < unique.size(); i = next++) {
            try {
                MompcConfig local = cfg;
                local.weights = unique[i];
                const auto sol = solve_step(state, soc, window, local, params);
                points[i].weights     = unique[i];
                points[i].motion_cost = sol.cost.motion;
                points[i].energy_cost = sol.cost.fuel + sol.cost.battery;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };

    const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(unique.size(), 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    mark_dominated(points);
    return points;
}

}  // namespace shev
