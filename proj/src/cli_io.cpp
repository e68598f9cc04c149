#include "tqw/cli_io.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "tqw/parallel.hpp"

namespace tqw {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

double num(const std::string& v, const std::string& key) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::invalid_argument(key + ": expected a number, got '" + t + "'");
    return d;
}

long long integer(const std::string& v, const std::string& key) {
    const double d = num(v, key);
    const long long i = (long long)(std::llround(d));
    if (double(i) != d)
        throw std::invalid_argument(key + ": expected an integer, got '" + trim(v) +
                                    "'");
    return i;
}

std::vector<double> num_list(const std::string& v, const std::string& key,
                             std::size_t want) {
    const std::vector<std::string> parts = split(v, ',');
    if (want != 0 && parts.size() != want)
        throw std::invalid_argument(key + ": expected " + std::to_string(want) +
                                    " comma-separated values");
    std::vector<double> out;
    for (const std::string& p : parts) out.push_back(num(p, key));
    return out;
}

bool boolean(const std::string& v, const std::string& key) {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw std::invalid_argument(key + ": expected true or false, got '" + t + "'");
}

WalkMode mode_from(const std::string& s) {
    if (s == "dirac4") return WalkMode::Dirac4;
    if (s == "weyl_first") return WalkMode::WeylFirst;
    if (s == "weyl_mirror") return WalkMode::WeylMirror;
    if (s == "robust4") return WalkMode::Robust4;
    throw std::invalid_argument(
        "walk.mode: expected dirac4, weyl_first, weyl_mirror or robust4, got '" + s +
        "'");
}

const char* mode_name(WalkMode m) {
    switch (m) {
        case WalkMode::Dirac4: return "dirac4";
        case WalkMode::WeylFirst: return "weyl_first";
        case WalkMode::WeylMirror: return "weyl_mirror";
        case WalkMode::Robust4: return "robust4";
    }
    return "?";
}

MassVariant variant_from(const std::string& s) {
    if (s == "massless") return MassVariant::Massless;
    if (s == "massive") return MassVariant::MassivePerSubstep;
    if (s == "massive_single") return MassVariant::MassiveSingle;
    throw std::invalid_argument(
        "walk.variant: expected massless, massive or massive_single, got '" + s + "'");
}

const char* variant_name(MassVariant v) {
    switch (v) {
        case MassVariant::Massless: return "massless";
        case MassVariant::MassivePerSubstep: return "massive";
        case MassVariant::MassiveSingle: return "massive_single";
    }
    return "?";
}

Axis axis_from(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw std::invalid_argument("walk.start_axis: expected x, y or z, got '" + s +
                                "'");
}

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        case Axis::Z: return "z";
    }
    return "?";
}

EngineChoice engine_from(const std::string& s) {
    if (s == "auto") return EngineChoice::Auto;
    if (s == "spinor") return EngineChoice::Spinor;
    if (s == "tetra") return EngineChoice::Tetra;
    throw std::invalid_argument("walk.engine: expected auto, spinor or tetra, got '" +
                                s + "'");
}

const char* engine_name(EngineChoice e) {
    switch (e) {
        case EngineChoice::Auto: return "auto";
        case EngineChoice::Spinor: return "spinor";
        case EngineChoice::Tetra: return "tetra";
    }
    return "?";
}

PacketSpec::Kind kind_from(const std::string& s) {
    if (s == "gaussian") return PacketSpec::Kind::Gaussian;
    if (s == "plane") return PacketSpec::Kind::Plane;
    if (s == "delta") return PacketSpec::Kind::Delta;
    throw std::invalid_argument("initial.kind: expected gaussian, plane or delta, got '" +
                                s + "'");
}

const char* kind_name(PacketSpec::Kind k) {
    switch (k) {
        case PacketSpec::Kind::Gaussian: return "gaussian";
        case PacketSpec::Kind::Plane: return "plane";
        case PacketSpec::Kind::Delta: return "delta";
    }
    return "?";
}

// One broken-link entry "x,y,z,H,facet" with H in {L,R}.
FacetRef facet_from(const std::string& s, const std::string& key) {
    const std::vector<std::string> parts = split(s, ',');
    if (parts.size() != 5)
        throw std::invalid_argument(key + ": expected x,y,z,H,facet, got '" + trim(s) +
                                    "'");
    FacetRef f;
    f.cell = {int(integer(parts[0], key)), int(integer(parts[1], key)),
              int(integer(parts[2], key))};
    const std::string h = trim(parts[3]);
    if (h == "L")
        f.hand = LH;
    else if (h == "R")
        f.hand = RH;
    else
        throw std::invalid_argument(key + ": hand must be L or R, got '" + h + "'");
    f.facet = int(integer(parts[4], key));
    if (f.facet < 0 || f.facet > 3)
        throw std::invalid_argument(key + ": facet out of range (0..3)");
    return f;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "lattice.dims") {
        const std::vector<double> v = num_list(value, key, 3);
        for (double d : v)
            if (d < 2 || d != std::floor(d) || std::llround(d) % 2 != 0)
                throw std::invalid_argument(
                    "lattice.dims must be even integers >= 2 per axis");
        cfg.dims = {int(v[0]), int(v[1]), int(v[2])};
    } else if (key == "lattice.eps") {
        cfg.eps = num(value, key);
        if (!(cfg.eps > 0.0))
            throw std::invalid_argument("lattice.eps out of range (must be > 0)");
    } else if (key == "lattice.defect_fraction") {
        cfg.defect_fraction = num(value, key);
        if (cfg.defect_fraction < 0.0 || cfg.defect_fraction > 1.0)
            throw std::invalid_argument(
                "lattice.defect_fraction out of range (must be in [0, 1])");
    } else if (key == "lattice.defect_seed") {
        const long long s = integer(value, key);
        if (s < 0)
            throw std::invalid_argument("lattice.defect_seed out of range (must be >= 0)");
        cfg.defect_seed = std::uint64_t(s);
    } else if (key == "lattice.broken") {
        for (const std::string& entry : split(value, ';'))
            if (!trim(entry).empty()) cfg.broken_links.push_back(facet_from(entry, key));
    } else if (key == "walk.mode") {
        cfg.walk.mode = mode_from(trim(value));
    } else if (key == "walk.variant") {
        cfg.walk.variant = variant_from(trim(value));
    } else if (key == "walk.mass") {
        cfg.walk.mass = num(value, key);
        if (cfg.walk.mass < 0.0)
            throw std::invalid_argument("walk.mass out of range (must be >= 0)");
    } else if (key == "walk.steps") {
        const long long s = integer(value, key);
        if (s < 0) throw std::invalid_argument("walk.steps out of range (must be >= 0)");
        cfg.steps = int(s);
    } else if (key == "walk.start_axis") {
        cfg.start = axis_from(trim(value));
    } else if (key == "walk.engine") {
        cfg.engine = engine_from(trim(value));
    } else if (key == "initial.kind") {
        cfg.packet.kind = kind_from(trim(value));
    } else if (key == "initial.center") {
        const std::vector<double> v = num_list(value, key, 3);
        cfg.packet.center = {v[0], v[1], v[2]};
    } else if (key == "initial.width") {
        cfg.packet.width = num(value, key);
        if (!(cfg.packet.width > 0.0))
            throw std::invalid_argument("initial.width out of range (must be > 0)");
    } else if (key == "initial.momentum") {
        const std::vector<double> v = num_list(value, key, 3);
        cfg.packet.momentum = {v[0], v[1], v[2]};
    } else if (key == "initial.polarization") {
        const std::vector<double> v = num_list(value, key, 0);
        if (v.size() < 2 || v.size() % 2 != 0)
            throw std::invalid_argument(
                "initial.polarization: expected re,im pairs (one per component)");
        cfg.packet.polarization.clear();
        for (std::size_t i = 0; i < v.size(); i += 2)
            cfg.packet.polarization.emplace_back(v[i], v[i + 1]);
    } else if (key == "output.directory") {
        cfg.directory = trim(value);
        if (cfg.directory.empty())
            throw std::invalid_argument("output.directory must not be empty");
    } else if (key == "output.snapshot_every") {
        const long long s = integer(value, key);
        if (s < 0)
            throw std::invalid_argument(
                "output.snapshot_every out of range (must be >= 0)");
        cfg.snapshot_every = int(s);
    } else if (key == "output.marginals") {
        cfg.marginals = boolean(value, key);
    } else {
        throw std::invalid_argument("unknown key '" + key + "'");
    }
}

LatticeSpec lattice_spec(const RunConfig& cfg) {
    LatticeSpec spec;
    spec.dims = cfg.dims;
    spec.eps = cfg.eps;
    spec.broken_links = cfg.broken_links;
    if (cfg.defect_fraction > 0.0) {
        const std::vector<FacetRef> sampled =
            sample_broken_links(cfg.dims, cfg.defect_fraction, cfg.defect_seed);
        spec.broken_links.insert(spec.broken_links.end(), sampled.begin(),
                                 sampled.end());
    }
    return spec;
}

// --- binary snapshot primitives (explicit little-endian) ---

void append_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& b, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t parse_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

double parse_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr std::size_t kHeaderBytes = 33;
constexpr std::uint32_t kFormatVersion = 1;

// --- grid observables ---

struct GridStats {
    double total = 0.0;
    std::array<double, 3> mean{};  // physical coordinates, eps * index
    std::array<std::vector<double>, 3> marginal;
};

GridStats grid_stats(const SpinorField& f) {
    GridStats st;
    st.marginal[0].assign(std::size_t(f.grid.nx), 0.0);
    st.marginal[1].assign(std::size_t(f.grid.ny), 0.0);
    st.marginal[2].assign(std::size_t(f.grid.nz), 0.0);
    for (std::int64_t s = 0; s < f.sites(); ++s) {
        double p = 0.0;
        for (int c = 0; c < f.ncomp; ++c) p += std::norm(f.at(s, c));
        const Vec3i k = f.grid.coords(s);
        st.total += p;
        st.marginal[0][std::size_t(k.x)] += p;
        st.marginal[1][std::size_t(k.y)] += p;
        st.marginal[2][std::size_t(k.z)] += p;
    }
    if (st.total > 0.0)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < st.marginal[j].size(); ++i)
                acc += double(i) * st.marginal[j][i];
            st.mean[std::size_t(j)] = f.eps * acc / st.total;
        }
    return st;
}

std::string counter_name(const char* stem, int step, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06d.%s", stem, step, ext);
    return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    const std::vector<std::string> lines = split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("expected `section.key = value`");
            const std::string key = trim(line.substr(0, eq));
            if (key.find('.') == std::string::npos)
                throw std::invalid_argument("expected a section.key name, got '" + key +
                                            "'");
            apply_key(cfg, key, line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(i + 1) + ": " +
                                        e.what());
        }
    }

    cfg.walk.eps = cfg.eps;
    try {
        cfg.walk.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    const int nc = component_count(cfg.walk.mode);
    if (!cfg.packet.polarization.empty() &&
        int(cfg.packet.polarization.size()) != nc)
        throw std::invalid_argument("config: initial.polarization needs " +
                                    std::to_string(nc) +
                                    " components for this walk mode");
    const bool defects = cfg.defect_fraction > 0.0 || !cfg.broken_links.empty();
    if (defects && cfg.walk.mode != WalkMode::Robust4)
        throw std::invalid_argument(
            "config: broken links require walk.mode = robust4");
    if (defects && cfg.engine == EngineChoice::Spinor)
        throw std::invalid_argument(
            "config: broken links require the tetra engine (walk.engine = auto)");
    if (cfg.engine == EngineChoice::Tetra && nc != 4)
        throw std::invalid_argument(
            "config: the tetra engine runs the four-component modes only");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

StateLayout run_layout(const RunConfig& cfg) {
    switch (cfg.walk.mode) {
        case WalkMode::WeylFirst: return StateLayout::WeylFirst;
        case WalkMode::WeylMirror: return StateLayout::WeylMirror;
        case WalkMode::Dirac4:
            return cfg.engine == EngineChoice::Tetra ? StateLayout::TetraDirac
                                                     : StateLayout::Dirac4;
        case WalkMode::Robust4:
            return cfg.engine == EngineChoice::Spinor ? StateLayout::Robust4
                                                      : StateLayout::TetraRobust;
    }
    return StateLayout::Dirac4;
}

const char* layout_name(StateLayout layout) {
    switch (layout) {
        case StateLayout::Dirac4: return "dirac4";
        case StateLayout::WeylFirst: return "weyl_first";
        case StateLayout::WeylMirror: return "weyl_mirror";
        case StateLayout::Robust4: return "robust4";
        case StateLayout::TetraDirac: return "tetra_dirac";
        case StateLayout::TetraRobust: return "tetra_robust";
    }
    return "?";
}

void write_snapshot(const StateSnapshot& s, std::ostream& os) {
    std::string buf;
    buf.reserve(kHeaderBytes + 16 * s.data.size());
    buf.append("TQW1", 4);
    append_u32(buf, kFormatVersion);
    buf.push_back(char(std::uint8_t(s.layout)));
    for (int j = 0; j < 3; ++j) append_u32(buf, s.dims[std::size_t(j)]);
    append_u32(buf, s.ncomp);
    append_f64(buf, s.eps);
    if (std::int64_t(s.data.size()) != s.points() * s.ncomp)
        throw std::runtime_error("snapshot payload does not match header dims");
    for (const cplx& z : s.data) {
        append_f64(buf, z.real());
        append_f64(buf, z.imag());
    }
    os.write(buf.data(), std::streamsize(buf.size()));
    if (!os) throw std::runtime_error("snapshot write failed");
}

StateSnapshot read_snapshot(std::istream& is) {
    unsigned char hdr[kHeaderBytes];
    is.read(reinterpret_cast<char*>(hdr), kHeaderBytes);
    if (is.gcount() != std::streamsize(kHeaderBytes))
        throw std::runtime_error("snapshot: truncated header");
    if (std::memcmp(hdr, "TQW1", 4) != 0)
        throw std::runtime_error("snapshot: bad magic (not a TQW1 file)");
    StateSnapshot s;
    const std::uint32_t version = parse_u32(hdr + 4);
    if (version != kFormatVersion)
        throw std::runtime_error("snapshot: unsupported format version " +
                                 std::to_string(version));
    if (hdr[8] > std::uint8_t(StateLayout::TetraRobust))
        throw std::runtime_error("snapshot: unknown layout tag " +
                                 std::to_string(int(hdr[8])));
    s.layout = StateLayout(hdr[8]);
    for (int j = 0; j < 3; ++j) s.dims[std::size_t(j)] = parse_u32(hdr + 9 + 4 * j);
    s.ncomp = parse_u32(hdr + 21);
    s.eps = parse_f64(hdr + 25);
    if (s.points() <= 0 || s.ncomp == 0 || s.ncomp > 64 ||
        s.points() > (std::int64_t(1) << 40))
        throw std::runtime_error("snapshot: implausible header dimensions");

    const std::int64_t count = s.points() * s.ncomp;
    std::string payload(std::size_t(count) * 16, '\0');
    is.read(payload.data(), std::streamsize(payload.size()));
    if (is.gcount() != std::streamsize(payload.size()))
        throw std::runtime_error("snapshot: truncated payload");
    s.data.resize(std::size_t(count));
    const unsigned char* p = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::int64_t i = 0; i < count; ++i)
        s.data[std::size_t(i)] = cplx(parse_f64(p + 16 * i), parse_f64(p + 16 * i + 8));
    return s;
}

void save_snapshot(const StateSnapshot& s, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write snapshot: " + path);
    write_snapshot(s, os);
}

StateSnapshot load_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open snapshot: " + path);
    return read_snapshot(is);
}

SpinorField make_initial(const RunConfig& cfg) {
    const Grid3 g{cfg.dims[0], cfg.dims[1], 2 * cfg.dims[2]};
    return make_packet(cfg.packet, g, cfg.eps, component_count(cfg.walk.mode));
}

StateSnapshot snapshot_of(const SpinorField& f, StateLayout layout) {
    StateSnapshot s;
    s.layout = layout;
    s.dims = {std::uint32_t(f.grid.nx), std::uint32_t(f.grid.ny),
              std::uint32_t(f.grid.nz)};
    s.ncomp = std::uint32_t(f.ncomp);
    s.eps = f.eps;
    s.data = f.data;
    return s;
}

StateSnapshot snapshot_of(const TetraField& f) {
    StateSnapshot s;
    s.layout = StateLayout::TetraDirac;
    s.dims = {std::uint32_t(f.dims[0]), std::uint32_t(f.dims[1]),
              std::uint32_t(f.dims[2])};
    s.ncomp = 8;
    s.eps = f.eps;
    s.data = f.data;
    return s;
}

StateSnapshot snapshot_of(const RobustTetraField& f) {
    StateSnapshot s;
    s.layout = StateLayout::TetraRobust;
    s.dims = {std::uint32_t(f.dims[0]), std::uint32_t(f.dims[1]),
              std::uint32_t(f.dims[2])};
    s.ncomp = 16;
    s.eps = f.eps;
    s.data = f.data;
    return s;
}

RunResult run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    const StateLayout layout = run_layout(cfg);
    const fs::path dir(cfg.directory);
    fs::create_directories(dir);

    std::optional<Lattice> lat;
    if (layout == StateLayout::TetraDirac || layout == StateLayout::TetraRobust)
        lat = build_lattice(lattice_spec(cfg));

    SpinorField grid_state = make_initial(cfg);
    TetraField tetra_state;
    RobustTetraField robust_state;

    std::function<void()> advance;
    std::function<double()> norm_of;
    std::function<StateSnapshot()> snap_of;
    std::function<GridStats()> stats_of;
    switch (layout) {
        case StateLayout::TetraDirac:
            tetra_state = scatter(*lat, grid_state);
            advance = [&] {
                tetra_state = step_dirac_tetra(*lat, tetra_state, cfg.walk, cfg.start);
            };
            norm_of = [&] { return tetra_state.norm(); };
            snap_of = [&] { return snapshot_of(tetra_state); };
            stats_of = [&] { return grid_stats(gather(*lat, tetra_state)); };
            break;
        case StateLayout::TetraRobust:
            robust_state = scatter_robust(*lat, grid_state);
            advance = [&] {
                robust_state =
                    step_dirac_robust(*lat, robust_state, cfg.walk, cfg.start);
            };
            norm_of = [&] { return robust_state.norm(); };
            snap_of = [&] { return snapshot_of(robust_state); };
            stats_of = [&] { return grid_stats(gather_robust(*lat, robust_state)); };
            break;
        default:
            advance = [&] { grid_state = step(grid_state, cfg.walk, cfg.start); };
            norm_of = [&] { return grid_state.norm(); };
            snap_of = [&] { return snapshot_of(grid_state, layout); };
            stats_of = [&] { return grid_stats(grid_state); };
            break;
    }

    RunResult res;
    res.layout = layout;

    const fs::path norms_path = dir / "norms.csv";
    const fs::path obs_path = dir / "observables.csv";
    std::ofstream norms(norms_path);
    std::ofstream obs(obs_path);
    if (!norms || !obs)
        throw std::runtime_error("cannot write artifacts under " + cfg.directory);
    norms << "step,norm,drift\n";
    obs << "step,mean_x,mean_y,mean_z,total_probability\n";
    res.artifacts.push_back(norms_path.string());
    res.artifacts.push_back(obs_path.string());

    res.initial_norm = norm_of();
    const double n0 = res.initial_norm;

    const auto snapshot_due = [&](int t) {
        if (t == 0 || t == cfg.steps) return true;
        return cfg.snapshot_every > 0 && t % cfg.snapshot_every == 0;
    };
    const auto emit = [&](int t) {
        const double n = norm_of();
        const double drift = n0 > 0.0 ? std::abs(n - n0) / n0 : 0.0;
        res.final_norm = n;
        res.max_drift = std::max(res.max_drift, drift);
        norms << t << ',' << g17(n) << ',' << g17(drift) << '\n';
        const GridStats st = stats_of();
        obs << t << ',' << g17(st.mean[0]) << ',' << g17(st.mean[1]) << ','
            << g17(st.mean[2]) << ',' << g17(st.total) << '\n';
        if (!snapshot_due(t)) return;
        const fs::path snap_path = dir / counter_name("state", t, "tqw");
        save_snapshot(snap_of(), snap_path.string());
        res.artifacts.push_back(snap_path.string());
        if (cfg.marginals) {
            const fs::path mg_path = dir / counter_name("marginals", t, "csv");
            std::ofstream mg(mg_path);
            if (!mg) throw std::runtime_error("cannot write " + mg_path.string());
            mg << "axis,index,probability\n";
            static const char* const axes[3] = {"x", "y", "z"};
            for (int j = 0; j < 3; ++j)
                for (std::size_t i = 0; i < st.marginal[std::size_t(j)].size(); ++i)
                    mg << axes[j] << ',' << i << ','
                       << g17(st.marginal[std::size_t(j)][i]) << '\n';
            res.artifacts.push_back(mg_path.string());
        }
    };

    emit(0);
    for (int t = 1; t <= cfg.steps; ++t) {
        advance();
        emit(t);
    }

    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    const std::int64_t sites =
        std::int64_t(cfg.dims[0]) * cfg.dims[1] * (2 * cfg.dims[2]);
    res.site_updates_per_second =
        cfg.steps > 0 && res.wall_seconds > 0.0
            ? double(sites) * cfg.steps / res.wall_seconds
            : 0.0;

    const fs::path md_path = dir / "metadata.txt";
    std::ofstream md(md_path);
    if (!md) throw std::runtime_error("cannot write " + md_path.string());
    md << "format.version = " << kFormatVersion << '\n';
    md << "config.lattice.dims = " << cfg.dims[0] << ',' << cfg.dims[1] << ','
       << cfg.dims[2] << '\n';
    md << "config.lattice.eps = " << g17(cfg.eps) << '\n';
    md << "config.lattice.defect_fraction = " << g17(cfg.defect_fraction) << '\n';
    md << "config.lattice.defect_seed = " << cfg.defect_seed << '\n';
    md << "config.lattice.broken = " << cfg.broken_links.size() << " explicit\n";
    md << "config.walk.mode = " << mode_name(cfg.walk.mode) << '\n';
    md << "config.walk.variant = " << variant_name(cfg.walk.variant) << '\n';
    md << "config.walk.mass = " << g17(cfg.walk.mass) << '\n';
    md << "config.walk.steps = " << cfg.steps << '\n';
    md << "config.walk.start_axis = " << axis_name(cfg.start) << '\n';
    md << "config.walk.engine = " << engine_name(cfg.engine) << '\n';
    md << "config.initial.kind = " << kind_name(cfg.packet.kind) << '\n';
    md << "config.initial.center = " << g17(cfg.packet.center[0]) << ','
       << g17(cfg.packet.center[1]) << ',' << g17(cfg.packet.center[2]) << '\n';
    md << "config.initial.width = " << g17(cfg.packet.width) << '\n';
    md << "config.initial.momentum = " << g17(cfg.packet.momentum[0]) << ','
       << g17(cfg.packet.momentum[1]) << ',' << g17(cfg.packet.momentum[2]) << '\n';
    md << "config.initial.polarization = ";
    if (cfg.packet.polarization.empty()) {
        md << "basis0\n";
    } else {
        for (std::size_t i = 0; i < cfg.packet.polarization.size(); ++i)
            md << (i ? "," : "") << g17(cfg.packet.polarization[i].real()) << ','
               << g17(cfg.packet.polarization[i].imag());
        md << '\n';
    }
    md << "config.output.directory = " << cfg.directory << '\n';
    md << "config.output.snapshot_every = " << cfg.snapshot_every << '\n';
    md << "config.output.marginals = " << (cfg.marginals ? "true" : "false") << '\n';
    md << "run.layout = " << layout_name(layout) << '\n';
    md << "run.parallelism = " << parallelism() << '\n';
    if (lat) {
        std::int64_t broken_slots = 0;
        for (std::uint8_t b : lat->broken) broken_slots += b;
        md << "run.broken_pairs = " << broken_slots / 2 << '\n';
    }
    md << "run.sites = " << sites << '\n';
    md << "run.initial_norm = " << g17(res.initial_norm) << '\n';
    md << "run.final_norm = " << g17(res.final_norm) << '\n';
    md << "run.max_drift = " << g17(res.max_drift) << '\n';
    md << "run.wall_seconds = " << g17(res.wall_seconds) << '\n';
    md << "run.site_updates_per_second = " << g17(res.site_updates_per_second)
       << '\n';
    res.artifacts.push_back(md_path.string());
    return res;
}

std::vector<std::string> validate_properties(const RunConfig& cfg) {
    std::vector<std::string> out;
    const auto check = [&](bool ok, const std::string& what) {
        if (!ok) out.push_back(what);
    };
    const double tol = 1e-13;

    const Mat2 c = coin_C();
    const Mat4 ch = coin_C_hat();
    const Mat4 m = mass_coin(0.37, 0.21);
    check(max_abs_diff(c * c * c, Mat2::identity()) < tol, "coin C cubed != I");
    check(max_abs_diff(ch * ch * ch, Mat4::identity()) < tol, "lifted coin cubed != I");
    check(max_abs_diff(ch * m * ch.dagger(), m) < tol,
          "mass coin not invariant under the lifted coin");
    check(max_abs_diff(m * ch * m.dagger(), ch) < tol,
          "lifted coin not invariant under the mass coin");
    for (int mu = 1; mu <= 3; ++mu) {
        const int prev = mu == 1 ? 3 : mu - 1;
        check(max_abs_diff(ch * alpha(prev) * ch.dagger(), alpha(mu)) < tol,
              "lifted coin does not advance alpha " + std::to_string(prev));
    }
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) {
            const Mat4 anti = alpha(i) * alpha(j) + alpha(j) * alpha(i);
            const Mat4 want = Mat4::identity() * cplx(i == j ? 2.0 : 0.0, 0.0);
            check(max_abs_diff(anti, want) < tol, "alpha anticommutator defect");
        }
        check(max_abs_diff(alpha(i) * gamma0() + gamma0() * alpha(i), Mat4{}) < tol,
              "alpha/gamma0 anticommutator defect");
    }

    const Lattice lat = build_lattice(lattice_spec(cfg));
    const ValidationReport vr = validate_gluing(lat);
    for (const std::string& f : vr.failures) out.push_back("gluing: " + f);

    LatticeSpec clean_spec;
    clean_spec.dims = cfg.dims;
    clean_spec.eps = cfg.eps;
    const Lattice clean = build_lattice(clean_spec);
    WalkParams wp;
    wp.eps = cfg.eps;
    wp.mass = 0.3;
    wp.variant = MassVariant::MassivePerSubstep;

    std::uint64_t seed = 0x5eedu;
    const auto noise = [&seed] {
        const double re = 2.0 * (double(splitmix64(seed) >> 11) * 0x1.0p-53) - 1.0;
        const double im = 2.0 * (double(splitmix64(seed) >> 11) * 0x1.0p-53) - 1.0;
        return cplx(re, im);
    };
    const auto field_gap = [](const SpinorField& a, const SpinorField& b) {
        double gap = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i)
            gap = std::max(gap, std::abs(a.data[i] - b.data[i]));
        return gap;
    };
    for (int trial = 0; trial < 3; ++trial) {
        TetraField tf = TetraField::zeros(clean);
        for (cplx& z : tf.data) z = noise();
        wp.mode = WalkMode::Dirac4;
        const double gap = field_gap(gather(clean, step_dirac_tetra(clean, tf, wp)),
                                     step(gather(clean, tf), wp));
        check(gap < 1e-12, "tetra/grid step disagreement " + g17(gap));

        RobustTetraField rf = RobustTetraField::zeros(clean);
        for (cplx& z : rf.data) z = noise();
        wp.mode = WalkMode::Robust4;
        const double rgap =
            field_gap(gather_robust(clean, step_dirac_robust(clean, rf, wp)),
                      step(gather_robust(clean, rf), wp));
        check(rgap < 1e-12, "robust/grid step disagreement " + g17(rgap));
    }
    return out;
}

BenchResult bench_walk(int size, int steps) {
    if (size < 2 || steps < 1)
        throw std::invalid_argument("bench needs size >= 2 and steps >= 1");
    BenchResult r;
    r.size = size;
    r.steps = steps;
    r.parallelism = parallelism();

    const Grid3 g{size, size, size};
    WalkParams wp;
    wp.eps = 0.1;
    wp.mass = 0.5;
    wp.variant = MassVariant::MassivePerSubstep;
    SpinorField f = SpinorField::zeros(g, 4, wp.eps);
    std::uint64_t seed = 0xbe9c45eedull;
    for (cplx& z : f.data)
        z = cplx(double(splitmix64(seed) >> 11) * 0x1.0p-53,
                 double(splitmix64(seed) >> 11) * 0x1.0p-53);
    const double n = f.norm();
    for (cplx& z : f.data) z /= n;
    r.state_bytes = std::uint64_t(f.data.size()) * sizeof(cplx);

    const auto t0 = std::chrono::steady_clock::now();
    for (int t = 0; t < steps; ++t) f = step(f, wp);
    const auto t1 = std::chrono::steady_clock::now();
    if (f.norm() < 0.5) throw std::runtime_error("bench state collapsed");
    r.seconds = std::chrono::duration<double>(t1 - t0).count();
    r.site_updates_per_second =
        r.seconds > 0.0 ? double(g.size()) * steps / r.seconds : 0.0;
    return r;
}

void write_dispersion_csv(const DispersionReport& rep, std::ostream& os) {
    const std::size_t branches =
        rep.samples.empty() ? 0 : rep.samples[0].walk_energies.size();
    os << "px,py,pz";
    for (std::size_t b = 0; b < branches; ++b) os << ",walk_" << b;
    for (std::size_t b = 0; b < branches; ++b) os << ",exact_" << b;
    os << ",error\n";
    for (const DispersionSample& s : rep.samples) {
        os << g17(s.p[0]) << ',' << g17(s.p[1]) << ',' << g17(s.p[2]);
        for (const double e : s.walk_energies) os << ',' << g17(e);
        for (const double e : s.exact_energies) os << ',' << g17(e);
        os << ',' << g17(s.error) << '\n';
    }
}

void write_convergence_csv(const ConvergenceReport& rep, std::ostream& os) {
    os << "level,eps,grid,error,estimated_order\n";
    for (std::size_t i = 0; i < rep.levels.size(); ++i)
        os << i << ',' << g17(rep.levels[i].eps) << ',' << rep.levels[i].grid << ','
           << g17(rep.levels[i].error) << ',' << g17(rep.estimated_order) << '\n';
}

void write_bench_csv(const BenchResult& rep, std::ostream& os) {
    os << "size,steps,parallelism,seconds,site_updates_per_second,state_bytes\n";
    os << rep.size << ',' << rep.steps << ',' << rep.parallelism << ','
       << g17(rep.seconds) << ',' << g17(rep.site_updates_per_second) << ','
       << rep.state_bytes << '\n';
}

namespace {

void write_report(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(std::cout);
        return;
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    body(os);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"quantum walk on the tetrahedral lattice: Dirac dynamics toolkit"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a configured walk, write artifacts");
    std::string sim_config;
    int sim_par = 0;
    sim->add_option("--config", sim_config, "run configuration file")->required();
    sim->add_option("--parallelism", sim_par, "worker threads (0 = hardware)");

    auto* disp =
        app.add_subcommand("dispersion", "walk eigenphases vs exact +-E(p), CSV");
    double d_mass = 0.0, d_eps = 0.1, d_pbox = 0.5;
    int d_samples = 5;
    std::string d_variant = "massive", d_mode = "dirac4", d_out;
    disp->add_option("--mass", d_mass, "mass m");
    disp->add_option("--eps", d_eps, "lattice spacing eps");
    disp->add_option("--pbox", d_pbox, "momentum box half-width");
    disp->add_option("--samples", d_samples, "samples per axis");
    disp->add_option("--variant", d_variant, "massless | massive | massive_single");
    disp->add_option("--mode", d_mode, "dirac4 | weyl_first | weyl_mirror");
    disp->add_option("--out", d_out, "output CSV path (default stdout)");

    auto* conv = app.add_subcommand(
        "converge", "refinement study against the spectral propagator, CSV");
    std::string c_config, c_out;
    int c_levels = 3;
    double c_time = 0.0;
    conv->add_option("--config", c_config, "run configuration file")->required();
    conv->add_option("--levels", c_levels, "refinement levels (>= 2)");
    conv->add_option("--time", c_time, "physical evolution time T")->required();
    conv->add_option("--out", c_out, "output CSV path (default stdout)");

    auto* val = app.add_subcommand("validate", "run the property suite");
    std::string v_config;
    val->add_option("--config", v_config, "run configuration file (defaults if omitted)");

    auto* ben = app.add_subcommand("bench", "walk throughput benchmark, CSV");
    int b_size = 64, b_steps = 100, b_par = 0;
    std::string b_out;
    ben->add_option("--size", b_size, "sites per axis");
    ben->add_option("--steps", b_steps, "full walk steps");
    ben->add_option("--parallelism", b_par, "worker threads (0 = hardware)");
    ben->add_option("--out", b_out, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) {
            set_parallelism(sim_par);
            const RunConfig cfg = load_config(sim_config);
            const RunResult res = run(cfg);
            std::cout << "layout = " << layout_name(res.layout) << '\n'
                      << "steps = " << cfg.steps << '\n'
                      << "final_norm = " << g17(res.final_norm) << '\n'
                      << "max_drift = " << g17(res.max_drift) << '\n'
                      << "wall_seconds = " << g17(res.wall_seconds) << '\n'
                      << "artifacts = " << res.artifacts.size() << " files under "
                      << cfg.directory << '\n';
        } else if (disp->parsed()) {
            WalkParams wp;
            wp.eps = d_eps;
            wp.mass = d_mass;
            wp.variant = variant_from(d_variant);
            wp.mode = mode_from(d_mode);
            const DispersionReport rep = dispersion_scan(wp, d_pbox, d_samples);
            write_report(d_out, [&](std::ostream& os) { write_dispersion_csv(rep, os); });
            if (!d_out.empty())
                std::cout << "max_error = " << g17(rep.max_error)
                          << "\npairing_defect = " << g17(rep.pairing_defect) << '\n';
        } else if (conv->parsed()) {
            const RunConfig cfg = load_config(c_config);
            if (cfg.dims[0] != cfg.dims[1] || cfg.dims[0] != 2 * cfg.dims[2])
                throw std::invalid_argument(
                    "converge needs a cubic site grid: lattice.dims = n,n,n/2");
            const ConvergenceReport rep = convergence_study(
                cfg.packet, c_time, cfg.eps, cfg.dims[0], c_levels, cfg.walk);
            write_report(c_out, [&](std::ostream& os) { write_convergence_csv(rep, os); });
            if (!c_out.empty())
                std::cout << "estimated_order = " << g17(rep.estimated_order) << '\n';
        } else if (val->parsed()) {
            const RunConfig cfg = v_config.empty() ? RunConfig{} : load_config(v_config);
            const std::vector<std::string> failures = validate_properties(cfg);
            if (!failures.empty()) {
                for (const std::string& f : failures) std::cerr << "FAIL " << f << '\n';
                return 1;
            }
            std::cout << "validate: all properties hold\n";
        } else if (ben->parsed()) {
            set_parallelism(b_par);
            const BenchResult rep = bench_walk(b_size, b_steps);
            write_report(b_out, [&](std::ostream& os) { write_bench_csv(rep, os); });
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tqw
