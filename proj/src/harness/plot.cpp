#include "hedgebench/harness/plot.hpp"

#include "hedgebench/errors.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hedgebench::harness {

PositionTrace position_trace(const std::vector<const env::Strategy*>& strategies, const market::PricePath& path,
                             const env::EnvConfig& config) {
    PositionTrace trace;
    trace.prices = path.prices;
    for (const auto* s : strategies) {
        const auto rec = env::run_episode(*s, path, config);
        trace.names.push_back(s->name());
        trace.positions.push_back(rec.positions);
    }
    return trace;
}

void write_position_csv(std::ostream& out, const PositionTrace& trace) {
    out << "t,S_t";
    for (const auto& n : trace.names) out << ",X^{" << n << "}_{t+1}";
    out << '\n';
    out.precision(17);
    const Eigen::Index horizon = trace.prices.size() - 1;
    for (Eigen::Index t = 0; t <= horizon; ++t) {
        out << t << ',' << trace.prices(t);
        for (const auto& x : trace.positions) {
            out << ',';
            if (t < horizon) out << x(t);
        }
        out << '\n';
    }
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 70.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;
constexpr std::array<const char*, 6> kColors = {"#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

}  // namespace

void write_position_svg(std::ostream& out, const PositionTrace& trace) {
    const Eigen::Index horizon = trace.prices.size() - 1;
    if (horizon < 1) {
        throw ContractError("write_position_svg: need at least one step");
    }
    double lo = trace.prices.minCoeff();
    double hi = trace.prices.maxCoeff();
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto x_of = [&](double t) { return kLeft + plot_w * t / static_cast<double>(horizon); };
    const auto y_price = [&](double s) { return kTop + plot_h * (hi - s) / (hi - lo); };
    const auto y_pos = [&](double x) { return kTop + plot_h * (1.0 - x); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#444\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double s = lo + (hi - lo) * k / 4.0;
        const double x = k / 4.0;
        std::ostringstream ls, lx;
        ls.precision(4);
        ls << s;
        lx << x;
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << y_price(s) + 4 << "\" text-anchor=\"end\" fill=\"#1f77b4\">"
            << ls.str() << "</text>\n";
        out << "<text x=\"" << kWidth - kRight + 6 << "\" y=\"" << y_pos(x) + 4 << "\">" << lx.str() << "</text>\n";
    }
    for (Eigen::Index t = 0; t <= horizon; ++t) {
        out << "<text x=\"" << x_of(static_cast<double>(t)) << "\" y=\"" << kHeight - kBottom + 16
            << "\" text-anchor=\"middle\">" << t << "</text>\n";
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">t</text>\n";
    out << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" fill=\"#1f77b4\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">S_t</text>\n";
    out << "<text x=\"" << kWidth - 16 << "\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(90 "
        << kWidth - 16 << ' ' << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">X_{t+1}</text>\n";

    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (Eigen::Index t = 0; t <= horizon; ++t) {
        out << x_of(static_cast<double>(t)) << ',' << y_price(trace.prices(t)) << ' ';
    }
    out << "\"/>\n";

    // Positions are held over (t, t+1]: drawn as steps.
    for (std::size_t k = 0; k < trace.positions.size(); ++k) {
        const char* color = kColors[k % kColors.size()];
        const auto& x = trace.positions[k];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (Eigen::Index t = 0; t < horizon; ++t) {
            out << x_of(static_cast<double>(t)) << ',' << y_pos(x(t)) << ' ' << x_of(static_cast<double>(t + 1)) << ','
                << y_pos(x(t)) << ' ';
        }
        out << "\"/>\n";
    }

    double ly = kTop + 14;
    out << "<text x=\"" << kLeft + 8 << "\" y=\"" << ly << "\" fill=\"#1f77b4\">S_t</text>\n";
    for (std::size_t k = 0; k < trace.names.size(); ++k) {
        ly += 14;
        out << "<text x=\"" << kLeft + 8 << "\" y=\"" << ly << "\" fill=\"" << kColors[k % kColors.size()] << "\">"
            << trace.names[k] << "</text>\n";
    }
    out << "</svg>\n";
}

void emit_position_plot(const std::vector<const env::Strategy*>& strategies, const market::PricePath& path,
                        const env::EnvConfig& config, const std::filesystem::path& stem) {
    const PositionTrace trace = position_trace(strategies, path, config);
    auto svg_path = stem;
    svg_path += ".svg";
    auto csv_path = stem;
    csv_path += ".csv";
    if (stem.has_parent_path()) {
        std::filesystem::create_directories(stem.parent_path());
    }
    std::ofstream svg(svg_path);
    std::ofstream csv(csv_path);
    if (!svg || !csv) {
        throw IoError("cannot write plot files at " + stem.string());
    }
    write_position_svg(svg, trace);
    write_position_csv(csv, trace);
}

}  // namespace hedgebench::harness
