#include "pvmod/dataset_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace pvmod {

namespace {

std::string full_precision(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Portable uniform draw in [lo, hi): top 53 bits of the engine output.
double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

double sample_target(const FiveParamModel& scaled_model, double v, OutputKind kind,
                     const SolveOptions& opts, std::size_t index) {
    try {
        const double i = solve_current(scaled_model, v, opts);
        return kind == OutputKind::current ? i : v * i;
    } catch (const SolverError& e) {
        throw SolverError("sample " + std::to_string(index) + ": " + e.what(),
                          e.bracket_lo(), e.bracket_hi());
    } catch (const SaturationError& e) {
        throw SaturationError("sample " + std::to_string(index) + ": " + e.what(),
                              e.exponent());
    }
}

FiveParamModel at_irradiance(const FiveParamModel& model, double g, double g_ref) {
    return FiveParamModel(photocurrent_at_irradiance(model.iph, g, g_ref),
                          model.i0, model.ideality, model.rs, model.rsh,
                          model.thermal);
}

// Splits a CSV line; empty fields are preserved.
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& field, const char* column, int line_no) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE ||
        !std::isfinite(x))
        throw ParseError(std::string("CSV: non-numeric ") + column + " on line " +
                         std::to_string(line_no));
    return x;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "' for reading");
    return in;
}

constexpr const char* k_dataset_header = "g_wm2,v_volt,t_kelvin,target";
constexpr const char* k_curve_header = "v_volt,i_ampere,p_watt";

} // namespace

Dataset generate_random(const FiveParamModel& model, std::size_t n,
                        std::pair<double, double> g_range,
                        std::pair<double, double> v_range, OutputKind kind,
                        std::uint64_t seed, const SolveOptions& opts) {
    if (n < 1)
        throw ValidationError("generate_random: n must be >= 1");
    if (!(g_range.first >= 0.0) || g_range.second < g_range.first)
        throw ValidationError("generate_random: invalid irradiance range");
    if (v_range.second < v_range.first)
        throw ValidationError("generate_random: invalid voltage range");
    if (!(g_range.second > 0.0))
        throw ValidationError("generate_random: upper irradiance bound must be > 0");

    const double g_ref = g_range.second;
    std::mt19937_64 rng(seed);
    Dataset data;
    data.kind = kind;
    data.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double g = g_range.first == g_range.second
                             ? g_range.first
                             : uniform_in(rng, g_range.first, g_range.second);
        const double v = v_range.first == v_range.second
                             ? v_range.first
                             : uniform_in(rng, v_range.first, v_range.second);
        const double y = sample_target(at_irradiance(model, g, g_ref), v, kind,
                                       opts, k);
        data.samples.push_back({g, v, std::nullopt, y});
    }
    std::ostringstream prov;
    prov << "random n=" << n << " g=[" << g_range.first << ',' << g_range.second
         << "] v=[" << v_range.first << ',' << v_range.second
         << "] kind=" << to_string(kind) << " seed=" << seed;
    data.provenance = prov.str();
    return data;
}

Dataset generate_grid(const FiveParamModel& model,
                      const std::vector<double>& g_values,
                      std::pair<double, double> v_range, std::size_t n_v,
                      OutputKind kind, const SolveOptions& opts) {
    if (g_values.empty())
        throw ValidationError("generate_grid: need at least one irradiance");
    if (n_v < 2)
        throw ValidationError("generate_grid: n_v must be >= 2");
    if (v_range.second <= v_range.first)
        throw ValidationError("generate_grid: invalid voltage range");

    double g_ref = g_values.front();
    for (double g : g_values) {
        if (!(g >= 0.0))
            throw ValidationError("generate_grid: irradiances must be >= 0");
        g_ref = std::max(g_ref, g);
    }
    if (!(g_ref > 0.0))
        throw ValidationError("generate_grid: largest irradiance must be > 0");

    Dataset data;
    data.kind = kind;
    data.samples.reserve(g_values.size() * n_v);
    std::size_t index = 0;
    for (double g : g_values) {
        const FiveParamModel scaled = at_irradiance(model, g, g_ref);
        for (std::size_t k = 0; k < n_v; ++k) {
            const double v = v_range.first + (v_range.second - v_range.first) *
                                                 static_cast<double>(k) /
                                                 static_cast<double>(n_v - 1);
            const double y = sample_target(scaled, v, kind, opts, index++);
            data.samples.push_back({g, v, std::nullopt, y});
        }
    }
    std::ostringstream prov;
    prov << "grid g={";
    for (std::size_t k = 0; k < g_values.size(); ++k)
        prov << (k ? "," : "") << g_values[k];
    prov << "} v=[" << v_range.first << ',' << v_range.second << "] n_v=" << n_v
         << " kind=" << to_string(kind);
    data.provenance = prov.str();
    return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& destination) {
    std::ofstream out = open_for_write(destination);
    out << k_dataset_header << '\n';
    for (const Sample& s : data.samples) {
        out << full_precision(s.irradiance) << ',' << full_precision(s.voltage)
            << ',';
        if (s.temperature)
            out << full_precision(*s.temperature);
        out << ',' << full_precision(s.target) << '\n';
    }
    if (!out)
        throw ValidationError("write failed for '" + destination.string() + "'");
}

Dataset read_dataset_csv(const std::filesystem::path& source, OutputKind kind) {
    std::ifstream in = open_for_read(source);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw ParseError("CSV: '" + source.string() + "' is empty (missing header)");
    ++line_no;
    if (split_fields(line) != split_fields(k_dataset_header))
        throw ParseError("CSV: unexpected header on line 1 of '" + source.string() +
                         "' (want '" + k_dataset_header + "')");

    Dataset data;
    data.kind = kind;
    data.provenance = source.string();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw ParseError("CSV: expected 4 columns on line " +
                             std::to_string(line_no) + ", got " +
                             std::to_string(fields.size()));
        Sample s;
        s.irradiance = parse_number(fields[0], "irradiance", line_no);
        s.voltage = parse_number(fields[1], "voltage", line_no);
        if (!fields[2].empty())
            s.temperature = parse_number(fields[2], "temperature", line_no);
        s.target = parse_number(fields[3], "target", line_no);
        data.samples.push_back(s);
    }
    return data;
}

void write_csv(const Curve& curve, const std::filesystem::path& destination) {
    std::ofstream out = open_for_write(destination);
    out << "# g_wm2=" << full_precision(curve.irradiance)
        << " t_kelvin=" << full_precision(curve.temperature_k)
        << " source_tag=" << curve.source_tag << '\n';
    out << k_curve_header << '\n';
    for (const CurvePoint& p : curve.points)
        out << full_precision(p.v) << ',' << full_precision(p.i) << ','
            << full_precision(p.p) << '\n';
    if (!out)
        throw ValidationError("write failed for '" + destination.string() + "'");
}

Curve read_curve_csv(const std::filesystem::path& source) {
    std::ifstream in = open_for_read(source);
    Curve curve;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    double prev_v = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos)
                    continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                if (key == "g_wm2")
                    curve.irradiance = parse_number(value, "irradiance", line_no);
                else if (key == "t_kelvin")
                    curve.temperature_k = parse_number(value, "temperature", line_no);
                else if (key == "source_tag")
                    curve.source_tag = value;
            }
            continue;
        }
        if (!header_seen) {
            if (split_fields(line) != split_fields(k_curve_header))
                throw ParseError("CSV: unexpected curve header on line " +
                                 std::to_string(line_no) + " (want '" +
                                 k_curve_header + "')");
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3)
            throw ParseError("CSV: expected 3 columns on line " +
                             std::to_string(line_no) + ", got " +
                             std::to_string(fields.size()));
        CurvePoint p;
        p.v = parse_number(fields[0], "voltage", line_no);
        p.i = parse_number(fields[1], "current", line_no);
        p.p = parse_number(fields[2], "power", line_no);
        const double vi = p.v * p.i;
        const double tol = 1e-12 * std::max(1.0, std::fabs(vi));
        if (std::fabs(p.p - vi) > tol)
            throw ParseError("CSV: power column is not v*i on line " +
                             std::to_string(line_no));
        p.p = vi;  // keep the identity exact after parsing
        if (!curve.points.empty() && !(p.v > prev_v))
            throw ParseError("CSV: voltages must be strictly increasing (line " +
                             std::to_string(line_no) + ")");
        prev_v = p.v;
        curve.points.push_back(p);
    }
    if (!header_seen)
        throw ParseError("CSV: '" + source.string() + "' has no curve header row");
    return curve;
}

} // namespace pvmod
