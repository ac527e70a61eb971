#include "reachrl/harness.hpp"

#include "reachrl/exact.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace reachrl {

std::string format_csv_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

std::string format_learn_row(const LearnRow& row, bool include_wall_ms) {
    std::ostringstream out;
    out << row.k << ',' << format_csv_double(row.delta_k) << ',' << format_csv_double(row.eps_k)
        << ',' << format_csv_double(row.p_k) << ',' << row.n_k << ',' << row.cum_samples << ','
        << format_csv_double(row.l_s0) << ',' << format_csv_double(row.u_s0) << ','
        << format_csv_double(row.error) << ',' << format_csv_double(row.policy_value) << ','
        << (row.is_optimal ? "true" : "false");
    if (include_wall_ms) out << ',' << format_csv_double(row.wall_ms);
    return out.str();
}

std::vector<LearnRow> parse_learn_csv(const std::string& text) {
    std::vector<LearnRow> rows;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (header.empty()) {
            header = fields;
            continue;
        }
        LearnRow row;
        for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) {
            const std::string& name = header[i];
            const std::string& value = fields[i];
            if (name == "k") row.k = std::stoi(value);
            else if (name == "delta_k") row.delta_k = std::stod(value);
            else if (name == "eps_k") row.eps_k = std::stod(value);
            else if (name == "p_k") row.p_k = std::stod(value);
            else if (name == "N_k") row.n_k = std::stoull(value);
            else if (name == "cum_samples") row.cum_samples = std::stoull(value);
            else if (name == "L_s0") row.l_s0 = std::stod(value);
            else if (name == "U_s0") row.u_s0 = std::stod(value);
            else if (name == "error") row.error = std::stod(value);
            else if (name == "policy_value") row.policy_value = std::stod(value);
            else if (name == "is_optimal") row.is_optimal = (value == "true" || value == "1");
            else if (name == "wall_ms") row.wall_ms = std::stod(value);
        }
        rows.push_back(row);
    }
    return rows;
}

OracleInfo compute_oracle(const Mdp& m) {
    OptimalValueResult result = optimal_value(m);
    return OracleInfo{result.value_at_initial, result.values};
}

double graded_policy_value(const Mdp& m, const MemorylessDetPolicy& policy) {
    return to_double(policy_value_exact(m, policy)[m.initial()]);
}

TrialResult run_trial(const Mdp& model, const LearnerConfig& config, std::uint64_t seed,
                      const OracleInfo& oracle) {
    TrialResult trial;
    trial.seed = seed;
    SimulatorHandle sim(model, seed);
    Learner learner(sim, config);
    trial.stages = learner.run();
    trial.rows.reserve(trial.stages.size());
    for (auto& stage : trial.stages) {
        double value = graded_policy_value(model, stage.policy);
        stage.exact_policy_value = value;
        LearnRow row;
        row.k = stage.params.k;
        row.delta_k = stage.params.delta_k;
        row.eps_k = stage.params.eps_k;
        row.p_k = stage.params.p_k;
        row.n_k = stage.simulations;
        row.cum_samples = stage.cumulative_samples;
        row.l_s0 = stage.lower_s0;
        row.u_s0 = stage.upper_s0;
        row.error = stage.error();
        row.policy_value = value;
        row.is_optimal = std::abs(value - oracle.optimal) <= 1e-9;
        row.wall_ms = stage.wall_seconds * 1000.0;
        trial.rows.push_back(row);
    }
    return trial;
}

namespace {

double median(std::vector<double> values) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

double sample_stddev(const std::vector<double>& values) {
    if (values.size() < 2) return 0;
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double acc = 0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

} // namespace

BenchRun run_bench(const Mdp& model, const BenchOptions& options) {
    BenchRun bench;
    bench.oracle = compute_oracle(model);
    bench.trials.resize(options.trials);

    std::size_t jobs = options.jobs == 0
                           ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                           : options.jobs;
    jobs = std::min(jobs, options.trials);

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t index = cursor.fetch_add(1);
            if (index >= options.trials) return;
            bench.trials[index] =
                run_trial(model, options.learner, options.seed + index, bench.oracle);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    std::size_t max_stages = 0;
    for (const auto& trial : bench.trials) {
        max_stages = std::max(max_stages, trial.rows.size());
    }
    for (std::size_t stage = 0; stage < max_stages; ++stage) {
        AggregateRow agg;
        agg.k = static_cast<int>(stage) + 1;
        std::vector<double> l, u, err, pv;
        std::size_t optimal = 0;
        for (const auto& trial : bench.trials) {
            // shorter trials carry their final stage forward
            bool padded = stage >= trial.rows.size();
            const LearnRow& row = padded ? trial.rows.back() : trial.rows[stage];
            if (padded) ++agg.padded;
            l.push_back(row.l_s0);
            u.push_back(row.u_s0);
            err.push_back(row.error);
            pv.push_back(row.policy_value);
            if (row.is_optimal) ++optimal;
        }
        agg.l_median = median(l);
        agg.l_stddev = sample_stddev(l);
        agg.u_median = median(u);
        agg.u_stddev = sample_stddev(u);
        agg.error_median = median(err);
        agg.error_stddev = sample_stddev(err);
        agg.policy_value_median = median(pv);
        agg.policy_value_stddev = sample_stddev(pv);
        agg.optimal_fraction =
            static_cast<double>(optimal) / static_cast<double>(bench.trials.size());
        bench.aggregate.push_back(agg);
    }
    return bench;
}

std::optional<int> stabilization_stage(const TrialResult& trial) {
    if (trial.rows.empty()) return std::nullopt;
    std::optional<int> from;
    for (const auto& row : trial.rows) {
        if (row.is_optimal) {
            if (!from) from = row.k;
        } else {
            from = std::nullopt;
        }
    }
    return from;
}

std::optional<double> median_stabilization_stage(const BenchRun& bench) {
    std::vector<double> stages;
    for (const auto& trial : bench.trials) {
        if (auto stage = stabilization_stage(trial)) stages.push_back(*stage);
    }
    if (stages.empty()) return std::nullopt;
    return median(stages);
}

namespace {

struct ChartScale {
    double x_min, x_max, y_min, y_max;
    double px(double x) const {
        return 70.0 + (x - x_min) / (x_max - x_min) * 540.0;
    }
    double py(double y) const {
        return 420.0 - (y - y_min) / (y_max - y_min) * 370.0;
    }
};

std::string svg_num(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", v);
    return buffer;
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series,
                              const std::optional<SvgBand>& band) {
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    auto extend = [&](double x, double y) {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    };
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) extend(x, y);
    }
    if (band) {
        for (const auto& [x, y] : band->upper) extend(x, y);
        for (const auto& [x, y] : band->lower) extend(x, y);
    }
    if (x_min > x_max) {
        x_min = 0;
        x_max = 1;
    }
    if (y_min > y_max) {
        y_min = 0;
        y_max = 1;
    }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    ChartScale scale{x_min, x_max, y_min, y_max};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">" << title << "</text>\n";

    if (band && !band->upper.empty()) {
        out << "<polygon fill=\"" << band->color << "\" fill-opacity=\"0.25\" stroke=\"none\" "
               "points=\"";
        for (const auto& [x, y] : band->upper) {
            out << svg_num(scale.px(x)) << "," << svg_num(scale.py(y)) << " ";
        }
        for (auto it = band->lower.rbegin(); it != band->lower.rend(); ++it) {
            out << svg_num(scale.px(it->first)) << "," << svg_num(scale.py(it->second)) << " ";
        }
        out << "\"/>\n";
    }

    // axes
    out << "<line x1=\"70\" y1=\"420\" x2=\"610\" y2=\"420\" stroke=\"black\"/>\n";
    out << "<line x1=\"70\" y1=\"50\" x2=\"70\" y2=\"420\" stroke=\"black\"/>\n";
    out << "<text x=\"340\" y=\"460\" text-anchor=\"middle\" font-size=\"13\" "
           "font-family=\"sans-serif\">" << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"235\" text-anchor=\"middle\" font-size=\"13\" "
           "font-family=\"sans-serif\" transform=\"rotate(-90 18 235)\">" << y_label
        << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        double fx = x_min + (x_max - x_min) * i / 4.0;
        double fy = y_min + (y_max - y_min) * i / 4.0;
        out << "<line x1=\"" << svg_num(scale.px(fx)) << "\" y1=\"420\" x2=\""
            << svg_num(scale.px(fx)) << "\" y2=\"424\" stroke=\"black\"/>\n";
        out << "<text x=\"" << svg_num(scale.px(fx)) << "\" y=\"438\" text-anchor=\"middle\" "
               "font-size=\"11\" font-family=\"sans-serif\">" << format_csv_double(fx)
            << "</text>\n";
        out << "<line x1=\"66\" y1=\"" << svg_num(scale.py(fy)) << "\" x2=\"70\" y2=\""
            << svg_num(scale.py(fy)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"62\" y=\"" << svg_num(scale.py(fy) + 4) << "\" text-anchor=\"end\" "
               "font-size=\"11\" font-family=\"sans-serif\">" << format_csv_double(fy)
            << "</text>\n";
    }

    int legend_y = 56;
    for (const auto& s : series) {
        if (s.points.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" "
               "points=\"";
        for (const auto& [x, y] : s.points) {
            out << svg_num(scale.px(x)) << "," << svg_num(scale.py(y)) << " ";
        }
        out << "\"/>\n";
        for (const auto& [x, y] : s.points) {
            out << "<circle cx=\"" << svg_num(scale.px(x)) << "\" cy=\"" << svg_num(scale.py(y))
                << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
        }
        out << "<line x1=\"500\" y1=\"" << legend_y << "\" x2=\"524\" y2=\"" << legend_y
            << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"530\" y=\"" << legend_y + 4 << "\" font-size=\"12\" "
               "font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 18;
    }
    out << "</svg>\n";
    return out.str();
}

void write_bench_artifacts(const BenchRun& bench, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream stages(fs::path(out_dir) / "stages.csv", std::ios::binary);
        if (!stages) throw std::runtime_error("cannot write to " + out_dir);
        stages << "trial,seed," << "k,delta_k,eps_k,p_k,N_k,cum_samples,L_s0,U_s0,error,"
               << "policy_value,is_optimal" << "\n";
        for (std::size_t t = 0; t < bench.trials.size(); ++t) {
            for (const auto& row : bench.trials[t].rows) {
                stages << t << ',' << bench.trials[t].seed << ','
                       << format_learn_row(row, /*include_wall_ms=*/false) << "\n";
            }
        }
    }
    {
        std::ofstream agg(fs::path(out_dir) / "aggregate.csv", std::ios::binary);
        agg << "k,L_median,L_stddev,U_median,U_stddev,error_median,error_stddev,"
            << "policy_value_median,policy_value_stddev,optimal_fraction,padded\n";
        for (const auto& row : bench.aggregate) {
            agg << row.k << ',' << format_csv_double(row.l_median) << ','
                << format_csv_double(row.l_stddev) << ',' << format_csv_double(row.u_median) << ','
                << format_csv_double(row.u_stddev) << ',' << format_csv_double(row.error_median)
                << ',' << format_csv_double(row.error_stddev) << ','
                << format_csv_double(row.policy_value_median) << ','
                << format_csv_double(row.policy_value_stddev) << ','
                << format_csv_double(row.optimal_fraction) << ',' << row.padded << "\n";
        }
    }

    SvgSeries lower{"L(s0) median", "#1f77b4", {}};
    SvgSeries upper{"U(s0) median", "#d62728", {}};
    SvgSeries error{"error median", "#2ca02c", {}};
    SvgSeries accuracy{"policy value median", "#9467bd", {}};
    SvgBand band{"#2ca02c", {}, {}};
    for (const auto& row : bench.aggregate) {
        double k = row.k;
        lower.points.emplace_back(k, row.l_median);
        upper.points.emplace_back(k, row.u_median);
        error.points.emplace_back(k, row.error_median);
        accuracy.points.emplace_back(k, row.policy_value_median);
        band.upper.emplace_back(k, row.error_median + row.error_stddev);
        band.lower.emplace_back(k, std::max(0.0, row.error_median - row.error_stddev));
    }

    auto write_text = [&](const std::string& name, const std::string& body) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        out << body;
    };
    write_text("bounds_vs_k.svg",
               render_line_chart("Value Bounds vs. Stage k", "stage k", "bound",
                                 {lower, upper}));
    write_text("error_vs_k.svg",
               render_line_chart("Error vs. Stage k", "stage k", "U(s0) - L(s0)", {error}, band));
    write_text("policy_accuracy_vs_k.svg",
               render_line_chart("Policy Accuracy vs. Stage k", "stage k", "policy value",
                                 {accuracy}));
}

} // namespace reachrl
