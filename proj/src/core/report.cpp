#include "offload/core/report.hpp"

#include <cmath>

#include "offload/core/errors.hpp"

namespace offload::core {

ExperimentReport build_report(const ReportInputs& in) {
    ExperimentReport report;
    report.strategy_name = in.strategy_name;
    report.seed = in.seed;
    report.total_tasks = in.total_generated;
    report.aborted = in.aborted;
    report.timeline = in.timeline;

    // Phase boundaries, back to back from the first phase start.
    std::vector<PhaseStats> phases;
    Ms cursor = in.phase0_start_ms;
    for (const auto& p : in.phases) {
        PhaseStats ps;
        ps.rf = p.rf;
        ps.start_ms = cursor;
        cursor += static_cast<Ms>(std::llround(p.duration_s * 1000.0));
        ps.end_ms = cursor;
        phases.push_back(ps);
    }
    const auto phase_of = [&phases](Ms t) -> PhaseStats* {
        for (auto& ps : phases) {
            if (t >= ps.start_ms && t < ps.end_ms) return &ps;
        }
        return phases.empty() ? nullptr : &phases.back();
    };

    std::vector<double> all_rts;
    std::map<const PhaseStats*, std::vector<double>> phase_rts;
    double energy_sum = 0;
    std::map<const PhaseStats*, double> phase_energy;
    std::int64_t completed = 0;
    std::int64_t dropped = 0;
    if (in.outcomes) {
        for (const auto& o : *in.outcomes) {
            PhaseStats* ps = phase_of(o.dispatch_time_ms);
            if (ps) ++ps->tasks;
            if (o.dropped) {
                ++dropped;
                if (ps) ++ps->drops;
                continue;
            }
            ++completed;
            all_rts.push_back(o.response_time_ms);
            energy_sum += o.energy_mj;
            if (ps) {
                ++ps->completed;
                phase_rts[ps].push_back(o.response_time_ms);
                phase_energy[ps] += o.energy_mj;
            }
        }
    }
    report.completed_tasks = completed;
    report.drop_count = dropped;
    report.in_flight_tasks = in.total_generated - completed - dropped;
    if (report.in_flight_tasks < 0 || report.in_flight_tasks != in.in_flight) {
        throw Error("task conservation violated: generated=" + std::to_string(in.total_generated) +
                    " completed=" + std::to_string(completed) + " dropped=" + std::to_string(dropped) +
                    " in_flight=" + std::to_string(in.in_flight));
    }

    if (!all_rts.empty()) {
        double sum = 0;
        for (const double rt : all_rts) sum += rt;
        report.avg_rt_ms = sum / static_cast<double>(all_rts.size());
        report.p99_rt_ms = metrics::percentile(all_rts, 99.0);
        report.energy_per_task_mj = energy_sum / static_cast<double>(all_rts.size());
    }
    for (auto& ps : phases) {
        const auto it = phase_rts.find(&ps);
        if (it != phase_rts.end() && !it->second.empty()) {
            double sum = 0;
            for (const double rt : it->second) sum += rt;
            ps.avg_rt_ms = sum / static_cast<double>(it->second.size());
            ps.p99_rt_ms = metrics::percentile(it->second, 99.0);
            ps.energy_per_task_mj = phase_energy[&ps] / static_cast<double>(it->second.size());
        }
    }
    report.phases = std::move(phases);

    if (in.samples && in.pod_categories) {
        double cpu_sum[2] = {0, 0};
        std::int64_t count[2] = {0, 0};
        for (const auto& s : *in.samples) {
            const auto it = in.pod_categories->find(s.pod_id);
            if (it == in.pod_categories->end()) continue;
            const int idx = it->second == NodeCategory::Small ? 0 : 1;
            cpu_sum[idx] += s.cpu_util;
            ++count[idx];
        }
        if (count[0]) report.per_category_utilization[NodeCategory::Small] = cpu_sum[0] / count[0];
        if (count[1]) report.per_category_utilization[NodeCategory::Medium] = cpu_sum[1] / count[1];
    }
    return report;
}

const char* const kOutcomesCsvHeader = "task_id,pod_id,dispatch_ms,rt_ms,energy_mj,dropped";

void append_outcome_csv(std::ostream& out, const TaskOutcome& o) {
    out << o.task_id << ',' << o.pod_id << ',' << o.dispatch_time_ms << ',' << o.response_time_ms
        << ',' << o.energy_mj << ',' << (o.dropped ? 1 : 0) << '\n';
}

}  // namespace offload::core
