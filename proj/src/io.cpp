#include "mnls/io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace mnls {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

double to_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw InputError("cannot parse " + what + " from '" + text + "'");
    }
    if (used != t.size()) throw InputError("cannot parse " + what + " from '" + text + "'");
    return v;
}

int to_int(const std::string& text, const std::string& what) {
    const double v = to_double(text, what);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw InputError(what + " must be an integer");
    return static_cast<int>(v);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

cplx parse_complex(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw InputError("empty complex literal");
    if (t.front() == '(' && t.back() == ')') {
        const auto comma = t.find(',');
        if (comma == std::string::npos) throw InputError("bad complex literal '" + text + "'");
        return {to_double(t.substr(1, comma - 1), "real part"), to_double(t.substr(comma + 1, t.size() - comma - 2), "imaginary part")};
    }
    if (t.back() != 'i' && t.back() != 'j') return {to_double(t, "real number"), 0.0};
    t.pop_back();
    // split at the last sign that is not an exponent sign
    std::size_t split = std::string::npos;
    for (std::size_t i = t.size(); i-- > 1;) {
        if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto imag_of = [&](const std::string& s) {
        if (s.empty() || s == "+") return 1.0;
        if (s == "-") return -1.0;
        return to_double(s, "imaginary part");
    };
    if (split == std::string::npos) return {0.0, imag_of(t)};
    return {to_double(t.substr(0, split), "real part"), imag_of(t.substr(split))};
}

// =============================================================================
// Potential presets
// =============================================================================

const char* kind_name(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::Gaussian: return "gaussian";
    case PotentialKind::Sech: return "sech";
    case PotentialKind::Box: return "box";
    case PotentialKind::GpSymmetric: return "gp-symmetric";
    case PotentialKind::File: return "file";
    }
    return "unknown";
}

RowMat PotentialSpec::matrix() const {
    if (kind == PotentialKind::GpSymmetric) {
        RowMat m(2, 2);
        m << q_plus, q_zero, q_zero, q_minus;
        return m;
    }
    if (direction.size() == 0) {
        return RowMat::Constant(p, q, cplx(1.0 / std::sqrt(static_cast<double>(p * q)), 0.0));
    }
    return direction;
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    auto literal = [&os](cplx z) { os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i"; };
    os << kind_name(kind) << ":p=" << p << ",q=" << q << ",sigma=" << sigma;
    if (kind == PotentialKind::File) {
        os << ",path=" << path;
        return os.str();
    }
    if (kind == PotentialKind::GpSymmetric) {
        os << ",q1=";
        literal(q_plus);
        os << ",q0=";
        literal(q_zero);
        os << ",qm1=";
        literal(q_minus);
    } else {
        os << ",amp=" << amplitude;
        if (direction.size() != 0) {
            os << ",dir=";
            for (Eigen::Index i = 0; i < direction.size(); ++i) {
                os << (i ? ";" : "");
                literal(direction(i / direction.cols(), i % direction.cols()));
            }
        }
    }
    os << ",width=" << width << ",center=" << center;
    return os.str();
}

namespace {

PotentialKind kind_from(const std::string& name) {
    const std::string n = lower(trim(name));
    if (n == "gaussian") return PotentialKind::Gaussian;
    if (n == "sech") return PotentialKind::Sech;
    if (n == "box") return PotentialKind::Box;
    if (n == "gp-symmetric" || n == "gp") return PotentialKind::GpSymmetric;
    if (n == "file") return PotentialKind::File;
    throw InputError("unknown potential kind '" + name + "'");
}

void apply_key(PotentialSpec& s, const std::string& key, const std::string& value, std::vector<cplx>& dir) {
    const std::string k = lower(trim(key));
    if (k == "kind") s.kind = kind_from(value);
    else if (k == "amp" || k == "amplitude") s.amplitude = to_double(value, "amp");
    else if (k == "width") s.width = to_double(value, "width");
    else if (k == "center") s.center = to_double(value, "center");
    else if (k == "p") s.p = to_int(value, "p");
    else if (k == "q") s.q = to_int(value, "q");
    else if (k == "sigma") s.sigma = to_int(value, "sigma");
    else if (k == "q1") s.q_plus = parse_complex(value);
    else if (k == "q0") s.q_zero = parse_complex(value);
    else if (k == "qm1") s.q_minus = parse_complex(value);
    else if (k == "path") s.path = trim(value);
    else if (k == "dir") {
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ';'))
            if (!trim(item).empty()) dir.push_back(parse_complex(item));
    } else {
        throw InputError("unknown potential key '" + key + "'");
    }
}

void finish(PotentialSpec& s, const std::vector<cplx>& dir) {
    if (s.kind == PotentialKind::GpSymmetric) {
        s.p = 2;
        s.q = 2;
    }
    if (s.p < 1 || s.q < 1) throw InputError("potential: p and q must be positive");
    if (s.sigma != 1 && s.sigma != -1) throw InputError("potential: sigma must be +1 or -1");
    if (!(s.width > 0.0)) throw InputError("potential: width must be positive");
    if (!dir.empty()) {
        if (dir.size() != static_cast<std::size_t>(s.p * s.q))
            throw InputError("potential: dir needs p*q entries");
        s.direction = RowMat(s.p, s.q);
        for (int r = 0; r < s.p; ++r)
            for (int c = 0; c < s.q; ++c) s.direction(r, c) = dir[static_cast<std::size_t>(r * s.q + c)];
    }
    if (s.kind == PotentialKind::File && s.path.empty()) throw InputError("potential: file kind needs a path");
}

std::string yaml_scalar(const YAML::Node& n) {
    if (n.IsSequence()) {
        std::string out;
        for (const auto& e : n) out += e.as<std::string>() + ";";
        return out;
    }
    return n.as<std::string>();
}

} // namespace

PotentialSpec parse_potential_spec(const std::string& text) {
    PotentialSpec s;
    std::vector<cplx> dir;
    const std::string t = trim(text);
    if (ends_with(t, ".mnls")) {
        s.kind = PotentialKind::File;
        s.path = t;
        const auto f = deserialize_field(read_file(t));
        s.p = f.p;
        s.q = f.q;
        s.sigma = f.sigma;
        return s;
    }
    if (ends_with(t, ".yaml") || ends_with(t, ".yml")) {
        YAML::Node root;
        try {
            root = YAML::LoadFile(t);
        } catch (const YAML::Exception& e) {
            throw InputError("potential file '" + t + "': " + e.what());
        }
        if (!root.IsMap()) throw InputError("potential file '" + t + "' must be a mapping");
        for (const auto& kv : root) apply_key(s, kv.first.as<std::string>(), yaml_scalar(kv.second), dir);
        finish(s, dir);
        return s;
    }
    const auto colon = t.find(':');
    s.kind = kind_from(t.substr(0, colon));
    if (colon != std::string::npos) {
        std::stringstream ss(t.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (trim(item).empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw InputError("potential: expected key=value, got '" + item + "'");
            apply_key(s, item.substr(0, eq), item.substr(eq + 1), dir);
        }
    }
    finish(s, dir);
    return s;
}

PotentialField materialize(const PotentialSpec& spec, const Grid1D& grid) {
    if (spec.kind == PotentialKind::File) {
        PotentialField f = deserialize_field(read_file(spec.path));
        if (!(f.grid == grid)) throw InputError("potential file grid differs from the configured x-grid");
        return f;
    }
    if (spec.kind == PotentialKind::GpSymmetric && (spec.p != 2 || spec.q != 2))
        throw InputError("gp-symmetric requires p = q = 2");
    const RowMat E = spec.matrix();
    if (E.rows() != spec.p || E.cols() != spec.q) throw InputError("potential: direction has the wrong shape");
    const double a = spec.amplitude;
    const double c = spec.center;
    const double w = spec.width;
    Profile profile;
    switch (spec.kind) {
    case PotentialKind::Gaussian:
        profile = [=](double x) { const double u = (x - c) / w; return RowMat(a * std::exp(-u * u) * E); };
        break;
    case PotentialKind::Sech:
        profile = [=](double x) { return RowMat(a / std::cosh((x - c) / w) * E); };
        break;
    case PotentialKind::Box:
        profile = [=](double x) {
            const double d = std::abs(x - c) - w;
            const double tol = 1e-12 * std::max(1.0, w);
            const double s = d < -tol ? 1.0 : (d <= tol ? 0.5 : 0.0);
            return RowMat(a * s * E);
        };
        break;
    case PotentialKind::GpSymmetric:
        profile = [=](double x) { const double u = (x - c) / w; return RowMat(std::exp(-u * u) * E); };
        break;
    case PotentialKind::File: break;
    }
    MatrixSeries samples(spec.p, spec.q, grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) samples[j] = profile(grid.node(j));
    const double edge = std::max(RowMat(samples[0]).norm(), profile(grid.back() + grid.step).norm());
    if (edge > 1e-10) {
        std::ostringstream os;
        os << "potential " << spec.describe() << " has |Q| = " << edge << " at the window edge (> 1e-10)";
        throw WindowError(os.str());
    }
    return PotentialField(grid, spec.p, spec.q, spec.sigma, std::move(samples), profile);
}

// =============================================================================
// Run configuration
// =============================================================================

RunConfig parse_run_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    RunConfig c;
    if (root.IsNull()) return c;
    if (!root.IsMap()) throw InputError("config: expected a flat mapping");
    double x_min = c.x_grid.start, x_max = c.x_grid.start + c.x_grid.length();
    double k_min = c.k_grid.start, k_max = c.k_grid.start + c.k_grid.length();
    int x_count = static_cast<int>(c.x_grid.count), k_count = static_cast<int>(c.k_grid.count);
    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        if (!kv.second.IsScalar()) throw InputError("config: key '" + key + "' must be a scalar");
        const std::string v = kv.second.as<std::string>();
        if (key == "p") c.p = to_int(v, key);
        else if (key == "q") c.q = to_int(v, key);
        else if (key == "sigma") c.sigma = to_int(v, key);
        else if (key == "x_min") x_min = to_double(v, key);
        else if (key == "x_max") x_max = to_double(v, key);
        else if (key == "x_count") x_count = to_int(v, key);
        else if (key == "k_min") k_min = to_double(v, key);
        else if (key == "k_max") k_max = to_double(v, key);
        else if (key == "k_count") k_count = to_int(v, key);
        else if (key == "solver_tol") c.solver_tol = to_double(v, key);
        else if (key == "symmetry_tol") c.symmetry_tol = to_double(v, key);
        else if (key == "cutoff_threshold") c.cutoff_threshold = to_double(v, key);
        else if (key == "s_infinity_margin") c.s_infinity_margin = to_double(v, key);
        else if (key == "backend") {
            const std::string b = lower(trim(v));
            if (b == "dense") c.backend = Backend::Dense;
            else if (b == "iterative") c.backend = Backend::Iterative;
            else throw InputError("config: backend must be dense or iterative");
        } else {
            throw InputError("config: unknown key '" + key + "'");
        }
    }
    if (x_count < 2 || k_count < 2) throw InputError("config: grid counts must be at least 2");
    if (!(x_max > x_min) || !(k_max > k_min)) throw InputError("config: empty grid window");
    c.x_grid = Grid1D::window(x_min, x_max, static_cast<std::size_t>(x_count));
    c.k_grid = Grid1D::window(k_min, k_max, static_cast<std::size_t>(k_count));
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

std::string dump_run_config(const RunConfig& c) {
    std::ostringstream os;
    os << "p: " << c.p << "\nq: " << c.q << "\nsigma: " << c.sigma << "\n"
       << "x_min: " << fmt(c.x_grid.start) << "\nx_max: " << fmt(c.x_grid.start + c.x_grid.length())
       << "\nx_count: " << c.x_grid.count << "\n"
       << "k_min: " << fmt(c.k_grid.start) << "\nk_max: " << fmt(c.k_grid.start + c.k_grid.length())
       << "\nk_count: " << c.k_grid.count << "\n"
       << "solver_tol: " << fmt(c.solver_tol) << "\nsymmetry_tol: " << fmt(c.symmetry_tol) << "\n"
       << "backend: " << (c.backend == Backend::Dense ? "dense" : "iterative") << "\n"
       << "cutoff_threshold: " << fmt(c.cutoff_threshold) << "\ns_infinity_margin: " << fmt(c.s_infinity_margin)
       << "\n";
    return os.str();
}

// =============================================================================
// Binary format
// =============================================================================

namespace {

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : b_(bytes) {}

    template <class T>
    T get() {
        need(sizeof(T));
        char buf[sizeof(T)];
        std::memcpy(buf, b_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

    std::string text(std::size_t n) {
        need(n);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    cplx z() {
        const double re = get<double>();
        const double im = get<double>();
        return {re, im};
    }

    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw FormatError("truncated MNLS data");
    }

    void finish() const {
        if (pos_ != b_.size()) throw FormatError("trailing bytes after MNLS payload");
    }

private:
    const std::string& b_;
    std::size_t pos_ = 0;
};

struct Header {
    Role role = Role::Field;
    int p = 1;
    int q = 1;
    int sigma = 1;
    Grid1D grid;
    std::string text;
};

std::string header(const Header& h) {
    std::string out = "MNLS";
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.role));
    put<std::int32_t>(out, h.p);
    put<std::int32_t>(out, h.q);
    put<std::int32_t>(out, h.sigma);
    put<std::uint32_t>(out, 0);
    put<double>(out, h.grid.start);
    put<double>(out, h.grid.step);
    put<std::uint64_t>(out, h.grid.count);
    put<std::uint64_t>(out, h.text.size());
    out += h.text;
    return out;
}

Header read_header(Reader& r, Role expected) {
    if (r.text(4) != "MNLS") throw FormatError("bad magic (expected MNLS)");
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion) throw FormatError("unsupported MNLS version " + std::to_string(version));
    Header h;
    h.role = static_cast<Role>(r.get<std::uint32_t>());
    if (h.role != expected) throw FormatError("MNLS role mismatch");
    h.p = r.get<std::int32_t>();
    h.q = r.get<std::int32_t>();
    h.sigma = r.get<std::int32_t>();
    (void)r.get<std::uint32_t>();
    h.grid.start = r.get<double>();
    h.grid.step = r.get<double>();
    h.grid.count = r.get<std::uint64_t>();
    const auto len = r.get<std::uint64_t>();
    h.text = r.text(len);
    if (h.p < 1 || h.q < 1 || h.p > 64 || h.q > 64) throw FormatError("implausible block dimensions");
    return h;
}

void put_series(std::string& out, const MatrixSeries& m) {
    for (const auto& z : m.raw()) {
        put<double>(out, z.real());
        put<double>(out, z.imag());
    }
}

MatrixSeries get_series(Reader& r, int rows, int cols, std::size_t count) {
    r.need(count * static_cast<std::size_t>(rows * cols) * 16);
    MatrixSeries m(rows, cols, count);
    for (auto& z : m.raw()) z = r.z();
    return m;
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

const std::string& lookup(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("MNLS header lacks '" + key + "'");
    return it->second;
}

const char* segment_kind_name(SegmentKind k) {
    switch (k) {
    case SegmentKind::Line: return "line";
    case SegmentKind::CircleArc: return "circle";
    case SegmentKind::EllipseArc: return "ellipse";
    }
    return "line";
}

SegmentKind segment_kind_from(const std::string& s) {
    if (s == "line") return SegmentKind::Line;
    if (s == "circle") return SegmentKind::CircleArc;
    if (s == "ellipse") return SegmentKind::EllipseArc;
    throw FormatError("unknown segment kind '" + s + "'");
}

} // namespace

Role peek_role(const std::string& bytes) {
    Reader r(bytes);
    if (r.text(4) != "MNLS") throw FormatError("bad magic (expected MNLS)");
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion) throw FormatError("unsupported MNLS version " + std::to_string(version));
    const auto role = r.get<std::uint32_t>();
    if (role < 1 || role > 5) throw FormatError("unknown MNLS role");
    return static_cast<Role>(role);
}

std::string serialize(const PotentialField& f) {
    std::string out = header({Role::Field, f.p, f.q, f.sigma, f.grid, {}});
    put_series(out, f.samples);
    return out;
}

PotentialField deserialize_field(const std::string& bytes) {
    Reader r(bytes);
    const Header h = read_header(r, Role::Field);
    auto s = get_series(r, h.p, h.q, h.grid.count);
    r.finish();
    return PotentialField(h.grid, h.p, h.q, h.sigma, std::move(s));
}

std::string serialize(const ScatteringData& sd) {
    std::string out = header({Role::Scattering, sd.p, sd.q, sd.sigma, sd.k_grid,
                              "consistency_gap=" + fmt(sd.consistency_gap) + "\n"});
    put_series(out, sd.A);
    put_series(out, sd.B);
    put_series(out, sd.C);
    put_series(out, sd.D);
    return out;
}

ScatteringData deserialize_scattering(const std::string& bytes) {
    Reader r(bytes);
    const Header h = read_header(r, Role::Scattering);
    const auto kv = key_values(h.text);
    ScatteringData sd(h.grid, h.p, h.q, h.sigma);
    sd.consistency_gap = to_double(lookup(kv, "consistency_gap"), "consistency_gap");
    const auto n = h.grid.count;
    sd.A = get_series(r, h.p, h.p, n);
    sd.B = get_series(r, h.p, h.q, n);
    sd.C = get_series(r, h.q, h.p, n);
    sd.D = get_series(r, h.q, h.q, n);
    r.finish();
    return sd;
}

std::string serialize(const JumpFactorization& j) {
    std::string out = header({Role::Jump, j.p, j.q, j.sigma, j.k_grid, {}});
    put_series(out, j.R);
    put_series(out, j.v);
    put_series(out, j.v_plus);
    put_series(out, j.v_minus);
    return out;
}

JumpFactorization deserialize_jump(const std::string& bytes) {
    Reader r(bytes);
    const Header h = read_header(r, Role::Jump);
    JumpFactorization j;
    j.k_grid = h.grid;
    j.p = h.p;
    j.q = h.q;
    j.sigma = h.sigma;
    const int n = h.p + h.q;
    j.R = get_series(r, h.p, h.q, h.grid.count);
    j.v = get_series(r, n, n, h.grid.count);
    j.v_plus = get_series(r, n, n, h.grid.count);
    j.v_minus = get_series(r, n, n, h.grid.count);
    r.finish();
    return j;
}

std::string serialize(const Contour& c) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "s_infinity=" << c.s_infinity << "\nhat=" << (c.hat ? 1 : 0) << "\nellipse_ratio=" << c.ellipse_ratio
       << "\nsegments=" << c.segments.size() << "\n";
    for (std::size_t i = 0; i < c.segments.size(); ++i) {
        const auto& s = c.segments[i];
        os << "segment" << i << "=" << s.name << " " << segment_kind_name(s.kind) << " " << s.orientation << " "
           << (s.carries_jump ? 1 : 0) << " " << s.start.real() << " " << s.start.imag() << " " << s.end.real() << " "
           << s.end.imag() << " " << s.radius_x << " " << s.radius_y << " " << s.nodes.size() << "\n";
    }
    os << "intersections=" << c.intersections.size() << "\n";
    for (std::size_t i = 0; i < c.intersections.size(); ++i) {
        os << "intersection" << i << "=" << c.intersections[i].real() << " " << c.intersections[i].imag();
        for (const auto& name : c.incidence[i]) os << " " << name;
        os << "\n";
    }
    std::string out = header({Role::Contour, 1, 1, 0, Grid1D(0.0, 1.0, 2), os.str()});
    for (const auto& s : c.segments) {
        for (const auto& z : s.nodes) {
            put<double>(out, z.real());
            put<double>(out, z.imag());
        }
        for (const auto& z : s.weights) {
            put<double>(out, z.real());
            put<double>(out, z.imag());
        }
    }
    return out;
}

Contour deserialize_contour(const std::string& bytes) {
    Reader r(bytes);
    const Header h = read_header(r, Role::Contour);
    const auto kv = key_values(h.text);
    Contour c;
    c.s_infinity = to_double(lookup(kv, "s_infinity"), "s_infinity");
    c.hat = lookup(kv, "hat") == "1";
    c.ellipse_ratio = to_double(lookup(kv, "ellipse_ratio"), "ellipse_ratio");
    const int ns = to_int(lookup(kv, "segments"), "segments");
    for (int i = 0; i < ns; ++i) {
        std::istringstream is(lookup(kv, "segment" + std::to_string(i)));
        ContourSegment s;
        std::string kind;
        int carries = 1;
        double sr, si, er, ei;
        std::size_t count = 0;
        if (!(is >> s.name >> kind >> s.orientation >> carries >> sr >> si >> er >> ei >> s.radius_x >> s.radius_y >> count))
            throw FormatError("malformed contour segment line");
        s.kind = segment_kind_from(kind);
        s.carries_jump = carries != 0;
        s.start = {sr, si};
        s.end = {er, ei};
        s.nodes.resize(count);
        s.weights.resize(count);
        c.segments.push_back(std::move(s));
    }
    const int ni = to_int(lookup(kv, "intersections"), "intersections");
    for (int i = 0; i < ni; ++i) {
        std::istringstream is(lookup(kv, "intersection" + std::to_string(i)));
        double re, im;
        if (!(is >> re >> im)) throw FormatError("malformed contour intersection line");
        c.intersections.emplace_back(re, im);
        std::vector<std::string> names;
        std::string name;
        while (is >> name) names.push_back(name);
        c.incidence.push_back(std::move(names));
    }
    for (auto& s : c.segments) {
        r.need(s.nodes.size() * 32);
        for (auto& z : s.nodes) z = r.z();
        for (auto& z : s.weights) z = r.z();
    }
    r.finish();
    return c;
}

std::string serialize(const FocusingJump& fj, const EtaOptions& eta) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "x0=" << fj.x0 << "\nx0_node=" << fj.x0_node << "\ns_infinity=" << fj.s_infinity
       << "\ns_node=" << fj.s_node << "\nminus_s_node=" << fj.minus_s_node << "\ncircle_nodes=" << fj.circle.size()
       << "\ncircle_angle_offset=" << fj.circle_angle_offset << "\nnode_rotations=" << fj.node_rotations
       << "\nellipse_ratio=" << fj.contour.ellipse_ratio << "\npole_scale=" << eta.pole_scale
       << "\norder=" << eta.order << "\n";
    std::string out = header({Role::FocusingJump, fj.p, fj.q, -1, fj.k_grid, os.str()});
    put_series(out, fj.R);
    put_series(out, fj.R0);
    for (std::size_t j = 0; j < fj.circle.size(); ++j) {
        put<double>(out, fj.circle[j].real());
        put<double>(out, fj.circle[j].imag());
        put<double>(out, static_cast<double>(fj.circle_sign[j]));
        put<double>(out, 0.0);
    }
    put_series(out, fj.X);
    put_series(out, fj.Y);
    return out;
}

FocusingJump deserialize_focusing_jump(const std::string& bytes) {
    Reader r(bytes);
    const Header h = read_header(r, Role::FocusingJump);
    const auto kv = key_values(h.text);
    FocusingJump fj;
    fj.p = h.p;
    fj.q = h.q;
    fj.k_grid = h.grid;
    fj.x0 = to_double(lookup(kv, "x0"), "x0");
    fj.x0_node = static_cast<std::size_t>(to_int(lookup(kv, "x0_node"), "x0_node"));
    fj.s_infinity = to_double(lookup(kv, "s_infinity"), "s_infinity");
    fj.s_node = static_cast<std::size_t>(to_int(lookup(kv, "s_node"), "s_node"));
    fj.minus_s_node = static_cast<std::size_t>(to_int(lookup(kv, "minus_s_node"), "minus_s_node"));
    const auto nc = static_cast<std::size_t>(to_int(lookup(kv, "circle_nodes"), "circle_nodes"));
    fj.circle_angle_offset = to_double(lookup(kv, "circle_angle_offset"), "circle_angle_offset");
    fj.node_rotations = to_int(lookup(kv, "node_rotations"), "node_rotations");
    const double ratio = to_double(lookup(kv, "ellipse_ratio"), "ellipse_ratio");
    EtaOptions eta;
    eta.pole_scale = to_double(lookup(kv, "pole_scale"), "pole_scale");
    eta.order = to_int(lookup(kv, "order"), "order");
    if (fj.s_node >= h.grid.count || fj.minus_s_node >= h.grid.count) throw FormatError("S_inf node outside the grid");
    fj.R = get_series(r, h.p, h.q, h.grid.count);
    fj.R0 = get_series(r, h.p, h.q, h.grid.count);
    r.need(nc * 32);
    fj.circle.resize(nc);
    fj.circle_sign.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        fj.circle[j] = r.z();
        fj.circle_sign[j] = static_cast<int>(r.z().real());
    }
    fj.X = get_series(r, h.q, h.p, nc);
    fj.Y = get_series(r, h.p, h.q, nc);
    r.finish();
    fj.contour = build_gamma_hat(fj.s_infinity, fj.k_grid, nc, ratio, fj.circle_angle_offset);
    refresh_conjugated(fj, eta);
    return fj;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for '" + path + "'");
}

// =============================================================================
// Text outputs
// =============================================================================

void write_field_csv(std::ostream& os, const PotentialField& f) {
    os << "x";
    for (int r = 0; r < f.p; ++r)
        for (int c = 0; c < f.q; ++c) os << ",re_q" << r + 1 << c + 1 << ",im_q" << r + 1 << c + 1;
    os << "\n" << std::setprecision(17);
    for (std::size_t j = 0; j < f.grid.count; ++j) {
        os << f.grid.node(j);
        for (int r = 0; r < f.p; ++r)
            for (int c = 0; c < f.q; ++c) os << "," << f.samples[j](r, c).real() << "," << f.samples[j](r, c).imag();
        os << "\n";
    }
}

void write_scattering_csv(std::ostream& os, const ScatteringData& sd) {
    os << "k";
    for (int r = 0; r < sd.p; ++r)
        for (int c = 0; c < sd.q; ++c) os << ",re_r" << r + 1 << c + 1 << ",im_r" << r + 1 << c + 1;
    os << ",abs_det_d\n" << std::setprecision(17);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < sd.k_grid.count; ++j) {
        const RowMat D = sd.D[j];
        const double det = std::abs(D.determinant());
        RowMat R = RowMat::Constant(sd.p, sd.q, cplx(nan, nan));
        if (det > 1e-10) R = RowMat(sd.B[j]) * D.inverse();
        os << sd.k_grid.node(j);
        for (int r = 0; r < sd.p; ++r)
            for (int c = 0; c < sd.q; ++c) os << "," << R(r, c).real() << "," << R(r, c).imag();
        os << "," << det << "\n";
    }
}

void Report::set(const std::string& key, const std::string& value) {
    for (auto& kv : items_)
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    items_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) {
    std::ostringstream os;
    os << std::setprecision(10) << value;
    set(key, os.str());
}

void Report::set(const std::string& key, long value) { set(key, std::to_string(value)); }

void Report::set_bool(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

std::string Report::str() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + ": " + v + "\n";
    return out;
}

std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 40;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    double xmin = x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
    double xmax = x.empty() ? 1.0 : *std::max_element(x.begin(), x.end());
    double ymin = 0.0, ymax = 0.0;
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title
       << "</text>\n"
       << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << L << "\" y=\"" << H - 20 << "\" font-size=\"11\">" << xmin << "</text>\n"
       << "<text x=\"" << W - R << "\" y=\"" << H - 20 << "\" font-size=\"11\" text-anchor=\"end\">" << xmax
       << "</text>\n"
       << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << ymax
       << "</text>\n"
       << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">" << ymin
       << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& [name, ys] = series[s];
        os << "<polyline fill=\"none\" stroke=\"" << colors[s % 5] << "\" points=\"";
        for (std::size_t j = 0; j < std::min(x.size(), ys.size()); ++j) os << px(x[j]) << "," << py(ys[j]) << " ";
        os << "\"/>\n<text x=\"" << W - R - 4 << "\" y=\"" << T + 16 * (s + 1) << "\" font-size=\"12\" fill=\""
           << colors[s % 5] << "\" text-anchor=\"end\">" << name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace mnls
