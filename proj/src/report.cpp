#include "sfalpha/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sfalpha {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string CsvTable::to_string() const {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    out << content;
}

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label, bool log_x,
                   bool log_y)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      log_x_(log_x), log_y_(log_y) {}

void SvgChart::add_series(const std::string& name, std::vector<double> xs, std::vector<double> ys) {
    series_.push_back({name, std::move(xs), std::move(ys)});
}

void SvgChart::add_reference_line(const std::string& name, double slope, double intercept) {
    ref_lines_.push_back({name, slope, intercept});
}

std::string SvgChart::render() const {
    const double width = 640, height = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 55;
    const double pw = width - ml - mr, ph = height - mt - mb;

    auto tx = [&](double v) { return log_x_ ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y_ ? std::log10(v) : v; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_)
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if ((log_x_ && !(s.xs[i] > 0.0)) || (log_y_ && !(s.ys[i] > 0.0)))
                continue;
            xmin = std::min(xmin, tx(s.xs[i]));
            xmax = std::max(xmax, tx(s.xs[i]));
            ymin = std::min(ymin, ty(s.ys[i]));
            ymax = std::max(ymax, ty(s.ys[i]));
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
    }
    if (ymin > ymax) {
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin)
        xmax = xmin + 1;
    if (ymax == ymin)
        ymax = ymin + 1;
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.08 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (!deterministic_) {
        std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "<!-- generated " << buf << " -->\n";
    }
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title_ << "</text>\n";
    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label_
       << (log_x_ ? " (log scale)" : "") << "</text>\n";
    os << "<text x=\"18\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " << mt + ph / 2
       << ")\">" << y_label_ << (log_y_ ? " (log scale)" : "") << "</text>\n";
    // tick labels at the corners
    os.precision(4);
    os << "<text x=\"" << ml << "\" y=\"" << mt + ph + 16 << "\" font-size=\"10\">"
       << (log_x_ ? std::pow(10.0, xmin) : xmin) << "</text>\n";
    os << "<text x=\"" << ml + pw - 30 << "\" y=\"" << mt + ph + 16 << "\" font-size=\"10\">"
       << (log_x_ ? std::pow(10.0, xmax) : xmax) << "</text>\n";
    os << "<text x=\"" << 6 << "\" y=\"" << mt + ph << "\" font-size=\"10\">"
       << (log_y_ ? std::pow(10.0, ymin) : ymin) << "</text>\n";
    os << "<text x=\"" << 6 << "\" y=\"" << mt + 10 << "\" font-size=\"10\">"
       << (log_y_ ? std::pow(10.0, ymax) : ymax) << "</text>\n";

    int color_idx = 0;
    double legend_y = mt + 14;
    for (const auto& rl : ref_lines_) {
        const char* c = colors[color_idx++ % 5];
        // line is ln y = intercept + slope ln x (log-log) or y = intercept + slope x;
        // internal transformed coordinates are log10
        const double x0 = xmin + 0.02 * (xmax - xmin), x1 = xmax - 0.02 * (xmax - xmin);
        double ly0, ly1;
        if (log_x_ && log_y_) {
            ly0 = rl.intercept / std::log(10.0) + rl.slope * x0;
            ly1 = rl.intercept / std::log(10.0) + rl.slope * x1;
        } else {
            ly0 = rl.intercept + rl.slope * x0;
            ly1 = rl.intercept + rl.slope * x1;
        }
        os << "<line x1=\"" << ml + (x0 - xmin) / (xmax - xmin) * pw << "\" y1=\""
           << mt + ph - (ly0 - ymin) / (ymax - ymin) * ph << "\" x2=\""
           << ml + (x1 - xmin) / (xmax - xmin) * pw << "\" y2=\""
           << mt + ph - (ly1 - ymin) / (ymax - ymin) * ph << "\" stroke=\"" << c
           << "\" stroke-dasharray=\"6 4\"/>\n";
        os << "<text x=\"" << ml + pw - 170 << "\" y=\"" << legend_y << "\" font-size=\"11\" fill=\""
           << c << "\">" << rl.name << "</text>\n";
        legend_y += 14;
    }
    for (const auto& s : series_) {
        const char* c = colors[color_idx++ % 5];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if ((log_x_ && !(s.xs[i] > 0.0)) || (log_y_ && !(s.ys[i] > 0.0)))
                continue;
            os << px(s.xs[i]) << "," << py(s.ys[i]) << " ";
        }
        os << "\"/>\n";
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if ((log_x_ && !(s.xs[i] > 0.0)) || (log_y_ && !(s.ys[i] > 0.0)))
                continue;
            os << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i])
               << "\" r=\"3\" fill=\"" << c << "\"/>\n";
        }
        os << "<text x=\"" << ml + pw - 170 << "\" y=\"" << legend_y << "\" font-size=\"11\" fill=\""
           << c << "\">" << s.name << "</text>\n";
        legend_y += 14;
    }
    os << "</svg>\n";
    return os.str();
}

std::string Manifest::to_string() const {
    std::ostringstream os;
    os << "tool_version = " << version << "\n";
    os << "subcommand = " << subcommand << "\n";
    os << "master_seed = " << seed << "\n";
    os << "duration_seconds = " << format_double(duration_seconds) << "\n";
    os << "\n[config]\n";
    for (const auto& [k, v] : config)
        os << k << " = " << v << "\n";
    os << "\n[outputs]\n";
    for (const auto& f : output_files)
        os << "file = " << f << "\n";
    if (!aborted_counts.empty()) {
        os << "\n[aborted_samples]\n";
        for (const auto& [k, v] : aborted_counts)
            os << k << " = " << v << "\n";
    }
    if (!result_lines.empty()) {
        os << "\n[results]\n";
        for (const auto& line : result_lines)
            os << line << "\n";
    }
    return os.str();
}

} // namespace sfalpha
