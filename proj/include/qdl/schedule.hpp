#pragma once

#include <vector>

#include "qdl/errors.hpp"
#include "qdl/rng.hpp"

namespace qdl {

// Piecewise-constant control drive: boundaries t_0 < t_1 < ... < t_S and one
// amplitude vector per segment [t_i, t_{i+1}). Lookup is right-continuous,
// with a tiny forward nudge so a grid time that lands on a boundary up to
// roundoff picks the segment starting there.
class ControlSchedule {
public:
    ControlSchedule() = default;
    ControlSchedule(std::vector<double> boundaries,
                    std::vector<std::vector<double>> amplitudes)
        : boundaries_(std::move(boundaries)), amplitudes_(std::move(amplitudes)) {
        if (boundaries_.size() != amplitudes_.size() + 1)
            throw ScheduleError("schedule needs one more boundary than segments");
        for (std::size_t i = 0; i + 1 < boundaries_.size(); ++i)
            if (!(boundaries_[i] < boundaries_[i + 1]))
                throw ScheduleError("schedule boundaries must be strictly increasing");
        if (!amplitudes_.empty()) {
            const std::size_t k = amplitudes_.front().size();
            for (const auto& a : amplitudes_)
                if (a.size() != k)
                    throw ScheduleError("schedule segments disagree on control count");
        }
    }

    // No controls anywhere: value_at returns an empty vector for every t.
    static ControlSchedule none() { return ControlSchedule(); }

    static ControlSchedule constant(std::vector<double> amplitudes, double t0, double t1) {
        return ControlSchedule({t0, t1}, {std::move(amplitudes)});
    }

    // S random segments of K independent amplitudes uniform in [-amp, amp].
    static ControlSchedule random_piecewise(double t0, double t1, int segments,
                                            int n_controls, double amp, Rng& rng) {
        std::vector<double> b(segments + 1);
        for (int i = 0; i <= segments; ++i)
            b[i] = t0 + (t1 - t0) * static_cast<double>(i) / segments;
        std::vector<std::vector<double>> a(segments, std::vector<double>(n_controls));
        for (auto& seg : a)
            for (double& x : seg) x = rng.uniform(-amp, amp);
        return ControlSchedule(std::move(b), std::move(a));
    }

    bool empty() const { return amplitudes_.empty(); }
    std::size_t n_controls() const { return empty() ? 0 : amplitudes_.front().size(); }
    std::size_t n_segments() const { return amplitudes_.size(); }
    double t_begin() const { return boundaries_.front(); }
    double t_end() const { return boundaries_.back(); }
    const std::vector<double>& boundaries() const { return boundaries_; }
    const std::vector<std::vector<double>>& amplitudes() const { return amplitudes_; }

    const std::vector<double>& value_at(double t) const {
        static const std::vector<double> no_controls;
        if (empty()) return no_controls;
        const double tn = t + 1e-9; // boundary snap
        if (tn < boundaries_.front() || t > boundaries_.back() + 1e-9)
            throw ScheduleError("time outside schedule domain");
        std::size_t seg = 0;
        while (seg + 1 < amplitudes_.size() && tn >= boundaries_[seg + 1]) ++seg;
        return amplitudes_[seg];
    }

private:
    std::vector<double> boundaries_;
    std::vector<std::vector<double>> amplitudes_;
};

} // namespace qdl
