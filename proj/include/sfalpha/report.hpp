#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sfalpha {

/// Full-precision float formatting (round-trippable, byte-stable).
std::string format_double(double v);

/// CSV with a pinned header; every cell formatted via format_double for
/// byte-identical reruns.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string to_string() const;
};

void write_file(const std::string& path, const std::string& content);

/// Minimal line-chart SVG writer: log-log or linear axes, one polyline per
/// series plus optional straight reference lines. Self-contained, diffable;
/// the timestamp comment is suppressed in deterministic mode.
class SvgChart {
public:
    SvgChart(std::string title, std::string x_label, std::string y_label, bool log_x, bool log_y);

    void add_series(const std::string& name, std::vector<double> xs, std::vector<double> ys);
    /// y = exp(intercept) * x^slope in log-log mode; y = intercept + slope x otherwise.
    void add_reference_line(const std::string& name, double slope, double intercept);
    void set_deterministic(bool v) { deterministic_ = v; }

    std::string render() const;

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
    };
    struct RefLine {
        std::string name;
        double slope, intercept;
    };
    std::string title_, x_label_, y_label_;
    bool log_x_, log_y_;
    bool deterministic_ = false;
    std::vector<Series> series_;
    std::vector<RefLine> ref_lines_;
};

/// Run manifest: resolved config, seed, tool version, duration, output files,
/// aborted-sample counts. Written exactly once per run.
struct Manifest {
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::string version;
    std::string subcommand;
    double duration_seconds = 0.0;
    std::vector<std::string> output_files;
    std::map<std::string, int> aborted_counts;
    std::vector<std::string> result_lines;
    std::string to_string() const;
};

} // namespace sfalpha
