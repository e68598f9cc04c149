#pragma once

// Batch front door: run-configuration parsing, initial-state generation,
// run orchestration with CSV and binary snapshot artifacts, report
// serialization, and the command-line entry point.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tqw/lattice.hpp"
#include "tqw/reference.hpp"
#include "tqw/spinor_model.hpp"
#include "tqw/tetra_engine.hpp"
#include "tqw/walk_params.hpp"

namespace tqw {

// Engine selection. Auto picks the robust tetrahedron engine for the
// robust4 mode and the grid kernel otherwise; Tetra forces the
// tetrahedron engine (plain for dirac4, robust for robust4); Spinor
// forces the grid kernel (robust4 then runs in its walker-pair component
// order, and broken links are not representable).
enum class EngineChoice { Auto, Spinor, Tetra };

struct RunConfig {
    // [lattice]
    std::array<int, 3> dims{8, 8, 8};  // cells per axis, each even >= 2
    double eps = 0.1;
    double defect_fraction = 0.0;  // sampled broken gluing pairs
    std::uint64_t defect_seed = 1;
    std::vector<FacetRef> broken_links;  // explicit extra defects

    // [walk]; walk.eps always mirrors lattice eps
    WalkParams walk;
    int steps = 0;
    Axis start = Axis::Z;
    EngineChoice engine = EngineChoice::Auto;

    // [initial]
    PacketSpec packet;

    // [output]
    std::string directory = "out";
    int snapshot_every = 0;  // 0: snapshot only the first and last states
    bool marginals = true;
};

// Line-oriented `section.key = value` text; '#' starts a comment, blank
// lines are skipped. Sections/keys:
//   lattice.dims = 8,8,8        walk.mode = dirac4|weyl_first|weyl_mirror|
//   lattice.eps = 0.1                       robust4
//   lattice.defect_fraction = 0 walk.variant = massless|massive|
//   lattice.defect_seed = 1                    massive_single
//   lattice.broken = x,y,z,H,f; ...  (H in {L,R}, f in 0..3)
//   walk.mass = 0  walk.steps = 0  walk.start_axis = z  walk.engine = auto
//   initial.kind = gaussian|plane|delta   initial.center = 0,0,0
//   initial.width = 1    initial.momentum = 0,0,0
//   initial.polarization = re,im, re,im, ...  (one pair per component)
//   output.directory = out  output.snapshot_every = 0
//   output.marginals = true
// Unknown keys, malformed values, and range violations raise
// std::invalid_argument naming the key and 1-based line. Defaults are the
// RunConfig initializers; every effective value is echoed into run
// metadata. Center/width/momentum are physical (grid spacing eps).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// State layout a config evolves; also the snapshot header tag.
enum class StateLayout : std::uint8_t {
    Dirac4 = 0,       // site grid, 4 components
    WeylFirst = 1,    // site grid, 2 components
    WeylMirror = 2,   // site grid, 2 components
    Robust4 = 3,      // site grid, 4 components, walker-pair order
    TetraDirac = 4,   // cell grid, 8 amplitudes: LH facets 0..3, RH 0..3
    TetraRobust = 5,  // cell grid, 16 amplitudes: LH comps 0..7, RH 0..7
};
StateLayout run_layout(const RunConfig& cfg);
const char* layout_name(StateLayout layout);

struct StateSnapshot {
    StateLayout layout = StateLayout::Dirac4;
    std::array<std::uint32_t, 3> dims{};  // grid extents (sites or cells)
    std::uint32_t ncomp = 0;              // amplitudes per grid point
    double eps = 0.1;
    std::vector<cplx> data;  // grid-major, z fastest, components innermost

    std::int64_t points() const {
        return std::int64_t(dims[0]) * dims[1] * dims[2];
    }
};

// Binary snapshot format: a fixed 33-byte header, then the payload.
//   bytes 0..3    magic "TQW1"
//   bytes 4..7    format version, u32 little-endian (currently 1)
//   byte  8       layout tag, u8
//   bytes 9..20   dims, three u32 little-endian
//   bytes 21..24  ncomp, u32 little-endian
//   bytes 25..32  eps, f64 little-endian
//   payload       ncomp * dims[0] * dims[1] * dims[2] (re, im) pairs of
//                 f64 little-endian, grid-major with z fastest,
//                 components innermost (16 * ncomp * product(dims) bytes)
// Round-trips are byte-identical. Readers throw std::runtime_error on a
// bad magic, unknown version/tag, or truncated payload.
void write_snapshot(const StateSnapshot& s, std::ostream& os);
StateSnapshot read_snapshot(std::istream& is);
void save_snapshot(const StateSnapshot& s, const std::string& path);
StateSnapshot load_snapshot(const std::string& path);

// Initial state on the effective site grid (dims[0], dims[1], 2*dims[2]),
// with the component count of the configured mode. The tetra layouts
// scatter this field onto the lattice.
SpinorField make_initial(const RunConfig& cfg);

// Snapshot views. The tetra fields are already stored in payload order:
// slot = (cell*2 + hand)*4 + facet gives 8 amplitudes per cell, and the
// robust index (cell*2 + hand)*8 + comp gives 16.
StateSnapshot snapshot_of(const SpinorField& f, StateLayout layout);
StateSnapshot snapshot_of(const TetraField& f);
StateSnapshot snapshot_of(const RobustTetraField& f);

struct RunResult {
    StateLayout layout = StateLayout::Dirac4;
    double initial_norm = 0.0;
    double final_norm = 0.0;
    double max_drift = 0.0;  // max over steps of |norm - norm0| / norm0
    double wall_seconds = 0.0;
    double site_updates_per_second = 0.0;
    std::vector<std::string> artifacts;  // paths written, in order
};

// Executes the configured run and writes, under config.directory:
//   norms.csv        step,norm,drift                 (every step)
//   observables.csv  step,mean_x,mean_y,mean_z,total_probability
//   marginals_NNNNNN.csv  axis,index,probability     (snapshot cadence)
//   state_NNNNNN.tqw                                 (snapshot cadence)
//   metadata.txt     flat `key = value` config echo, versions, timings
// Tetra layouts report observables/marginals on the gathered walker
// field. CSV floats carry 17 significant digits. Engine errors and I/O
// failures propagate as exceptions.
RunResult run(const RunConfig& cfg);

// Property sweep behind `validate`: coin-algebra identities, gluing
// certification of the configured lattice, and cross-engine agreement on
// a defect-free sibling lattice. Returns human-readable failure strings;
// empty means pass.
std::vector<std::string> validate_properties(const RunConfig& cfg);

struct BenchResult {
    int size = 0;   // sites per axis
    int steps = 0;
    int parallelism = 0;
    double seconds = 0.0;
    double site_updates_per_second = 0.0;  // sites * steps / seconds
    std::uint64_t state_bytes = 0;         // one state buffer
};

// Times the four-component massive walk (per-substep mass coin, m = 0.5)
// on a size^3 grid. The walk double-buffers, so peak state memory is
// about twice state_bytes.
BenchResult bench_walk(int size, int steps);

// Report serialization (17-significant-digit CSV with headers).
void write_dispersion_csv(const DispersionReport& rep, std::ostream& os);
void write_convergence_csv(const ConvergenceReport& rep, std::ostream& os);
void write_bench_csv(const BenchResult& rep, std::ostream& os);

// Entry point behind the `tqw` binary: subcommands simulate, dispersion,
// converge, validate, bench. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace tqw
