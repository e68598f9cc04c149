#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tqw/cli_io.hpp"
#include "tqw/parallel.hpp"

using namespace tqw;
namespace fs = std::filesystem;

namespace {

// Unique scratch directory per test; removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("tqw_test_" + std::string(tag) + "_" + std::to_string(++counter) +
                "_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(bool(out));
    out << text;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

bool mentions(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

std::uint64_t mix(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

TEST_CASE("parse_config: minimal text fills documented defaults") {
    const RunConfig cfg = parse_config(
        "lattice.dims = 4,4,4\n"
        "lattice.eps = 0.2\n"
        "walk.steps = 5\n");
    CHECK(cfg.dims == std::array<int, 3>{4, 4, 4});
    CHECK(cfg.eps == 0.2);
    CHECK(cfg.walk.eps == 0.2);
    CHECK(cfg.steps == 5);
    CHECK(cfg.walk.mode == WalkMode::Dirac4);
    CHECK(cfg.walk.variant == MassVariant::Massless);
    CHECK(cfg.walk.mass == 0.0);
    CHECK(cfg.engine == EngineChoice::Auto);
    CHECK(cfg.packet.kind == PacketSpec::Kind::Gaussian);
    CHECK(cfg.directory == "out");
    CHECK(cfg.snapshot_every == 0);
    CHECK(cfg.marginals);
    CHECK(cfg.defect_fraction == 0.0);
}

TEST_CASE("parse_config: comments, spacing and full key coverage") {
    const RunConfig cfg = parse_config(
        "# run description\n"
        "lattice.dims = 6, 4, 8   # cells\n"
        "lattice.eps=0.05\n"
        "\n"
        "walk.mode = robust4\n"
        "walk.variant = massive_single\n"
        "walk.mass = 0.5\n"
        "walk.steps = 12\n"
        "walk.start_axis = x\n"
        "walk.engine = tetra\n"
        "lattice.defect_fraction = 0.25\n"
        "lattice.defect_seed = 99\n"
        "lattice.broken = 0,0,0,L,2 ; 1,2,3,R,0\n"
        "initial.kind = delta\n"
        "initial.center = 0.1, 0.2, 0.3\n"
        "initial.width = 0.4\n"
        "initial.momentum = -0.2, 0, 0.7\n"
        "initial.polarization = 1,0, 0,0, 0,1, 0,0\n"
        "output.directory = scratch/run1\n"
        "output.snapshot_every = 3\n"
        "output.marginals = false\n");
    CHECK(cfg.dims == std::array<int, 3>{6, 4, 8});
    CHECK(cfg.walk.mode == WalkMode::Robust4);
    CHECK(cfg.walk.variant == MassVariant::MassiveSingle);
    CHECK(cfg.start == Axis::X);
    CHECK(cfg.engine == EngineChoice::Tetra);
    CHECK(cfg.defect_fraction == 0.25);
    CHECK(cfg.defect_seed == 99);
    REQUIRE(cfg.broken_links.size() == 2);
    CHECK(cfg.broken_links[0] == FacetRef{{0, 0, 0}, LH, 2});
    CHECK(cfg.broken_links[1] == FacetRef{{1, 2, 3}, RH, 0});
    CHECK(cfg.packet.kind == PacketSpec::Kind::Delta);
    CHECK(cfg.packet.momentum[2] == 0.7);
    REQUIRE(cfg.packet.polarization.size() == 4);
    CHECK(cfg.packet.polarization[2] == cplx(0, 1));
    CHECK(cfg.directory == "scratch/run1");
    CHECK(cfg.snapshot_every == 3);
    CHECK_FALSE(cfg.marginals);
}

TEST_CASE("parse_config: errors carry the line number and the key") {
    const auto fails_with = [](const std::string& text, const std::string& needle) {
        try {
            parse_config(text);
            return false;
        } catch (const std::invalid_argument& e) {
            return mentions(e, needle);
        }
    };
    CHECK(fails_with("walk.mass = -1\n", "walk.mass"));
    CHECK(fails_with("walk.mass = -1\n", "config line 1"));
    CHECK(fails_with("lattice.eps = 0.1\n\nwalk.bogus = 3\n", "config line 3"));
    CHECK(fails_with("walk.bogus = 3\n", "unknown key"));
    CHECK(fails_with("lattice.dims = 3,4,4\n", "even"));
    CHECK(fails_with("lattice.dims = 4,4\n", "3 comma-separated"));
    CHECK(fails_with("walk.steps = soon\n", "expected a number"));
    CHECK(fails_with("walk.steps = 2.5\n", "expected an integer"));
    CHECK(fails_with("just some words\n", "section.key"));
    CHECK(fails_with("mass = 1\n", "section.key"));
    CHECK(fails_with("lattice.defect_fraction = 1.5\n", "[0, 1]"));
    CHECK(fails_with("output.marginals = maybe\n", "true or false"));
    CHECK(fails_with("lattice.broken = 0,0,0,Q,1\n", "L or R"));
}

TEST_CASE("parse_config: cross-field validation") {
    // Defects demand the defect-tolerant mode.
    CHECK_THROWS_AS(parse_config("lattice.defect_fraction = 0.1\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config("walk.mode = robust4\nlattice.defect_fraction = 0.1\n"
                     "walk.engine = spinor\n"),
        std::invalid_argument);
    CHECK_NOTHROW(
        parse_config("walk.mode = robust4\nlattice.defect_fraction = 0.1\n"));

    // The tetra engine is four-component only.
    CHECK_THROWS_AS(parse_config("walk.mode = weyl_first\nwalk.engine = tetra\n"),
                    std::invalid_argument);

    // Polarization length must match the mode.
    CHECK_THROWS_AS(parse_config("initial.polarization = 1,0, 0,0\n"),
                    std::invalid_argument);
    CHECK_NOTHROW(
        parse_config("walk.mode = weyl_first\ninitial.polarization = 1,0, 0,0\n"));

    // Single-mass variant needs a four-component mode.
    CHECK_THROWS_AS(
        parse_config("walk.mode = weyl_first\nwalk.variant = massive_single\n"),
        std::invalid_argument);
}

TEST_CASE("run_layout: engine choice maps modes onto layouts") {
    RunConfig cfg;
    cfg.walk.mode = WalkMode::Dirac4;
    CHECK(run_layout(cfg) == StateLayout::Dirac4);
    cfg.engine = EngineChoice::Tetra;
    CHECK(run_layout(cfg) == StateLayout::TetraDirac);
    cfg.engine = EngineChoice::Auto;
    cfg.walk.mode = WalkMode::WeylFirst;
    CHECK(run_layout(cfg) == StateLayout::WeylFirst);
    cfg.walk.mode = WalkMode::WeylMirror;
    CHECK(run_layout(cfg) == StateLayout::WeylMirror);
    cfg.walk.mode = WalkMode::Robust4;
    CHECK(run_layout(cfg) == StateLayout::TetraRobust);
    cfg.engine = EngineChoice::Spinor;
    CHECK(run_layout(cfg) == StateLayout::Robust4);
    CHECK(std::string(layout_name(StateLayout::TetraRobust)) == "tetra_robust");
}

TEST_CASE("make_initial: honors the mode's component count and normalizes") {
    RunConfig cfg;
    cfg.dims = {4, 4, 4};
    cfg.packet.kind = PacketSpec::Kind::Delta;
    const SpinorField d4 = make_initial(cfg);
    CHECK(d4.ncomp == 4);
    CHECK(d4.grid.nz == 8);  // z-doubled site grid
    CHECK(std::abs(d4.norm() - 1.0) < 1e-14);

    cfg.walk.mode = WalkMode::WeylFirst;
    cfg.packet.kind = PacketSpec::Kind::Gaussian;
    cfg.packet.width = 0.3;
    cfg.packet.center = {0.2, 0.2, 0.2};
    const SpinorField w2 = make_initial(cfg);
    CHECK(w2.ncomp == 2);
    CHECK(std::abs(w2.norm() - 1.0) < 1e-13);
}

TEST_CASE("snapshots: header fields and byte-identical round-trips") {
    const Grid3 g{3, 4, 5};
    SpinorField f = SpinorField::zeros(g, 4, 0.25);
    std::uint64_t s = 77;
    for (cplx& z : f.data)
        z = cplx(double(mix(s) >> 11) * 0x1.0p-53, double(mix(s) >> 11) * 0x1.0p-53);

    const StateSnapshot snap = snapshot_of(f, StateLayout::Dirac4);
    std::ostringstream first;
    write_snapshot(snap, first);
    CHECK(first.str().size() == 33u + 16u * snap.data.size());

    std::istringstream in(first.str());
    const StateSnapshot back = read_snapshot(in);
    CHECK(back.layout == StateLayout::Dirac4);
    CHECK(back.dims == std::array<std::uint32_t, 3>{3, 4, 5});
    CHECK(back.ncomp == 4);
    CHECK(back.eps == 0.25);
    REQUIRE(back.data.size() == snap.data.size());
    CHECK(back.data == snap.data);

    std::ostringstream second;
    write_snapshot(back, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("snapshots: tetra layouts store per-cell amplitude blocks") {
    LatticeSpec spec;
    spec.dims = {2, 2, 2};
    const Lattice lat = build_lattice(spec);

    TetraField tf = TetraField::zeros(lat);
    for (std::size_t i = 0; i < tf.data.size(); ++i) tf.data[i] = cplx(double(i), 0);
    const StateSnapshot ts = snapshot_of(tf);
    CHECK(ts.layout == StateLayout::TetraDirac);
    CHECK(ts.ncomp == 8);
    CHECK(ts.points() == 8);
    // Cell 0: LH facets 0..3 then RH facets 0..3, matching slot order.
    CHECK(ts.data[3] == cplx(3, 0));
    CHECK(ts.data[4] == cplx(4, 0));

    RobustTetraField rf = RobustTetraField::zeros(lat);
    for (std::size_t i = 0; i < rf.data.size(); ++i) rf.data[i] = cplx(0, double(i));
    const StateSnapshot rs = snapshot_of(rf);
    CHECK(rs.ncomp == 16);
    CHECK(rs.data.size() == 8u * 16u);

    std::ostringstream os;
    write_snapshot(rs, os);
    std::istringstream is(os.str());
    CHECK(read_snapshot(is).data == rs.data);
}

TEST_CASE("snapshots: readers reject malformed streams") {
    SpinorField f = SpinorField::zeros(Grid3{2, 2, 2}, 2, 0.1);
    std::ostringstream os;
    write_snapshot(snapshot_of(f, StateLayout::WeylFirst), os);
    const std::string good = os.str();

    std::istringstream bad_magic("XXXX" + good.substr(4));
    CHECK_THROWS_AS(read_snapshot(bad_magic), std::runtime_error);

    std::string wrong_version = good;
    wrong_version[4] = 2;
    std::istringstream bad_version(wrong_version);
    CHECK_THROWS_AS(read_snapshot(bad_version), std::runtime_error);

    std::string wrong_tag = good;
    wrong_tag[8] = 9;
    std::istringstream bad_tag(wrong_tag);
    CHECK_THROWS_AS(read_snapshot(bad_tag), std::runtime_error);

    std::istringstream truncated(good.substr(0, good.size() - 5));
    CHECK_THROWS_AS(read_snapshot(truncated), std::runtime_error);

    std::istringstream header_only(good.substr(0, 20));
    CHECK_THROWS_AS(read_snapshot(header_only), std::runtime_error);
}

TEST_CASE("run: artifacts, unitary norms, and the 0-step run") {
    TempDir tmp("run");
    RunConfig cfg = parse_config(
        "lattice.dims = 4,4,2\n"
        "walk.variant = massive\n"
        "walk.mass = 0.3\n"
        "walk.steps = 4\n"
        "output.snapshot_every = 2\n");
    cfg.directory = (tmp.path / "a").string();
    const RunResult res = run(cfg);

    CHECK(res.layout == StateLayout::Dirac4);
    CHECK(std::abs(res.initial_norm - 1.0) < 1e-12);
    CHECK(res.max_drift < 1e-12);
    CHECK(fs::exists(tmp.path / "a" / "norms.csv"));
    CHECK(fs::exists(tmp.path / "a" / "observables.csv"));
    CHECK(fs::exists(tmp.path / "a" / "state_000000.tqw"));
    CHECK(fs::exists(tmp.path / "a" / "state_000002.tqw"));
    CHECK(fs::exists(tmp.path / "a" / "state_000004.tqw"));
    CHECK(!fs::exists(tmp.path / "a" / "state_000001.tqw"));
    CHECK(fs::exists(tmp.path / "a" / "marginals_000004.csv"));
    CHECK(fs::exists(tmp.path / "a" / "metadata.txt"));

    const std::string norms = slurp(tmp.path / "a" / "norms.csv");
    CHECK(count_lines(norms) == 6);  // header + steps 0..4
    CHECK(norms.rfind("step,norm,drift\n", 0) == 0);
    const std::string md = slurp(tmp.path / "a" / "metadata.txt");
    CHECK(md.find("config.walk.mass = 0.29999999999999999") != std::string::npos);
    CHECK(md.find("run.layout = dirac4") != std::string::npos);
    CHECK(md.find("run.max_drift = ") != std::string::npos);

    // Marginals: probabilities along each axis sum to the total norm^2.
    const std::string mg = slurp(tmp.path / "a" / "marginals_000004.csv");
    CHECK(mg.rfind("axis,index,probability\n", 0) == 0);
    CHECK(count_lines(mg) == 1 + 4 + 4 + 4);

    // A 0-step run snapshots only the initial state.
    cfg.steps = 0;
    cfg.directory = (tmp.path / "b").string();
    const RunResult zero = run(cfg);
    CHECK(std::abs(zero.final_norm - 1.0) < 1e-12);
    CHECK(fs::exists(tmp.path / "b" / "state_000000.tqw"));
    int snapshots = 0;
    for (const auto& entry : fs::directory_iterator(tmp.path / "b"))
        if (entry.path().extension() == ".tqw") ++snapshots;
    CHECK(snapshots == 1);
}

TEST_CASE("run: engines agree through their grid views") {
    TempDir tmp("eng");
    const char* base =
        "lattice.dims = 4,4,2\n"
        "lattice.eps = 0.1\n"
        "walk.variant = massive\n"
        "walk.mass = 0.2\n"
        "walk.steps = 3\n"
        "initial.kind = gaussian\n"
        "initial.center = 0.2,0.2,0.2\n"
        "initial.width = 0.15\n";

    RunConfig spinor_cfg = parse_config(base);
    spinor_cfg.directory = (tmp.path / "spinor").string();
    RunConfig tetra_cfg = parse_config(std::string(base) + "walk.engine = tetra\n");
    tetra_cfg.directory = (tmp.path / "tetra").string();
    const RunResult a = run(spinor_cfg);
    const RunResult b = run(tetra_cfg);
    CHECK(a.layout == StateLayout::Dirac4);
    CHECK(b.layout == StateLayout::TetraDirac);
    CHECK(std::abs(a.final_norm - b.final_norm) < 1e-12);
    // Identical dynamics => identical norms.csv and observables.csv.
    CHECK(slurp(tmp.path / "spinor" / "norms.csv") ==
          slurp(tmp.path / "tetra" / "norms.csv"));
    CHECK(slurp(tmp.path / "spinor" / "observables.csv") ==
          slurp(tmp.path / "tetra" / "observables.csv"));
}

TEST_CASE("run: robust engine with seeded defects is unitary and reproducible") {
    TempDir tmp("rob");
    const char* text =
        "lattice.dims = 4,4,4\n"
        "walk.mode = robust4\n"
        "walk.variant = massive\n"
        "walk.mass = 0.3\n"
        "walk.steps = 6\n"
        "lattice.defect_fraction = 0.05\n"
        "lattice.defect_seed = 7\n"
        "initial.kind = delta\n"
        "initial.center = 0.2,0.2,0.2\n";
    RunConfig cfg1 = parse_config(text);
    cfg1.directory = (tmp.path / "r1").string();
    RunConfig cfg2 = parse_config(text);
    cfg2.directory = (tmp.path / "r2").string();

    const RunResult r1 = run(cfg1);
    CHECK(r1.layout == StateLayout::TetraRobust);
    CHECK(r1.max_drift < 1e-12);
    run(cfg2);
    CHECK(slurp(tmp.path / "r1" / "state_000006.tqw") ==
          slurp(tmp.path / "r2" / "state_000006.tqw"));
    const std::string md = slurp(tmp.path / "r1" / "metadata.txt");
    CHECK(md.find("run.broken_pairs = ") != std::string::npos);
    CHECK(md.find("run.broken_pairs = 0\n") == std::string::npos);
}

TEST_CASE("run: snapshots are byte-identical across parallelism degrees") {
    TempDir tmp("par");
    const char* text =
        "lattice.dims = 4,4,2\n"
        "walk.variant = massive\n"
        "walk.mass = 0.4\n"
        "walk.steps = 5\n"
        "initial.kind = gaussian\n"
        "initial.center = 0.2,0.1,0.3\n"
        "initial.width = 0.12\n"
        "initial.momentum = 0.3,0,0\n";
    RunConfig cfg1 = parse_config(text);
    cfg1.directory = (tmp.path / "p1").string();
    RunConfig cfg4 = parse_config(text);
    cfg4.directory = (tmp.path / "p4").string();

    set_parallelism(1);
    run(cfg1);
    set_parallelism(4);
    run(cfg4);
    set_parallelism(0);

    CHECK(slurp(tmp.path / "p1" / "state_000005.tqw") ==
          slurp(tmp.path / "p4" / "state_000005.tqw"));
    CHECK(slurp(tmp.path / "p1" / "norms.csv") == slurp(tmp.path / "p4" / "norms.csv"));
}

TEST_CASE("validate_properties: default config passes") {
    RunConfig cfg;
    cfg.dims = {4, 4, 4};
    const std::vector<std::string> failures = validate_properties(cfg);
    for (const std::string& f : failures) MESSAGE(f);
    CHECK(failures.empty());
}

TEST_CASE("bench_walk: positive throughput and sane accounting") {
    const BenchResult r = bench_walk(8, 2);
    CHECK(r.size == 8);
    CHECK(r.steps == 2);
    CHECK(r.seconds > 0.0);
    CHECK(r.site_updates_per_second > 0.0);
    CHECK(r.state_bytes == 8ull * 8 * 8 * 4 * 16);
    CHECK_THROWS_AS(bench_walk(1, 1), std::invalid_argument);

    std::ostringstream os;
    write_bench_csv(r, os);
    CHECK(count_lines(os.str()) == 2);
    CHECK(os.str().rfind("size,steps,", 0) == 0);
}

TEST_CASE("report CSV writers: headers and row counts") {
    WalkParams wp;
    wp.eps = 0.1;
    const DispersionReport rep = dispersion_scan(wp, 0.5, 3);
    std::ostringstream os;
    write_dispersion_csv(rep, os);
    const std::string csv = os.str();
    CHECK(count_lines(csv) == 1 + 27);
    CHECK(csv.rfind("px,py,pz,walk_0,walk_1,walk_2,walk_3,exact_0,", 0) == 0);

    ConvergenceReport conv;
    conv.levels = {{0.2, 8, 0.5}, {0.1, 16, 0.25}};
    conv.estimated_order = 1.0;
    std::ostringstream cs;
    write_convergence_csv(conv, cs);
    CHECK(count_lines(cs.str()) == 3);
    CHECK(cs.str().rfind("level,eps,grid,error,estimated_order\n", 0) == 0);
}

TEST_CASE("run_cli: subcommands wire up end to end") {
    TempDir tmp("cli");
    const fs::path cfg_path = tmp.path / "run.cfg";
    spit(cfg_path,
         "lattice.dims = 4,4,2\n"
         "walk.steps = 2\n"
         "output.directory = " + (tmp.path / "out").string() + "\n");

    const auto call = [](std::initializer_list<const char*> args) {
        std::vector<const char*> argv = {"tqw"};
        argv.insert(argv.end(), args.begin(), args.end());
        return run_cli(int(argv.size()), argv.data());
    };

    const std::string cfg_arg = cfg_path.string();
    CHECK(call({"simulate", "--config", cfg_arg.c_str(), "--parallelism", "2"}) == 0);
    CHECK(fs::exists(tmp.path / "out" / "state_000002.tqw"));
    set_parallelism(0);

    const std::string disp_out = (tmp.path / "disp.csv").string();
    CHECK(call({"dispersion", "--mass", "0.1", "--eps", "0.1", "--pbox", "0.4",
                "--samples", "2", "--out", disp_out.c_str()}) == 0);
    CHECK(count_lines(slurp(disp_out)) == 1 + 8);

    const fs::path conv_cfg = tmp.path / "conv.cfg";
    spit(conv_cfg,
         "lattice.dims = 8,8,4\n"
         "lattice.eps = 0.2\n"
         "walk.variant = massive\n"
         "walk.mass = 0.2\n"
         "initial.width = 0.4\n"
         "initial.momentum = 0.2,0.1,0\n");
    const std::string conv_arg = conv_cfg.string();
    const std::string conv_out = (tmp.path / "conv.csv").string();
    CHECK(call({"converge", "--config", conv_arg.c_str(), "--levels", "2", "--time",
                "0.4", "--out", conv_out.c_str()}) == 0);
    CHECK(count_lines(slurp(conv_out)) == 3);

    CHECK(call({"validate", "--config", cfg_arg.c_str()}) == 0);

    const std::string bench_out = (tmp.path / "bench.csv").string();
    CHECK(call({"bench", "--size", "8", "--steps", "2", "--out",
                bench_out.c_str()}) == 0);
    CHECK(count_lines(slurp(bench_out)) == 2);
    set_parallelism(0);

    // Failures: unknown flag, missing config file, bad config values.
    CHECK(call({"simulate", "--config", "/nonexistent/x.cfg"}) != 0);
    CHECK(call({"frobnicate"}) != 0);
    const fs::path bad_cfg = tmp.path / "bad.cfg";
    spit(bad_cfg, "walk.mass = -2\n");
    const std::string bad_arg = bad_cfg.string();
    CHECK(call({"simulate", "--config", bad_arg.c_str()}) != 0);
}
