#pragma once

// Periodic tetrahedral lattice: two tetrahedra (one left-handed, one
// right-handed) per cubic cell, four facets each (0 blue, 1 red, 2 cyan,
// 3 magenta), with an involutive facet gluing. Facets 0/1 glue LH<->RH
// within a cell; facets 2/3 glue same-handed tetrahedra of z-adjacent
// cells (cube-cube gluings preserve handedness). Facet slots embed into
// the z-doubled site grid (d1, d2, 2*d3): facets 0/2 of cell c sit at
// e(c) = (cx, cy, 2*cz + par(c)) with par(c) = (cx+cy) mod 2, facets 1/3
// one level above. Within-cell gluings are co-sited; cross-cell gluings
// span one z-level, which is what lets the composed shift convey
// amplitudes along z.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tqw {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

// z -> x -> y -> z, the order in which the walk cycles its shift axis.
Axis cycle_axis(Axis a);

// Parity-class direction table on integer positions: returns 0/1/2 for the
// x/y/z transport classes and -1 for the all-even / all-odd classes.
int direction(const std::array<int, 3>& k);

enum Hand : int { LH = 0, RH = 1 };

struct Vec3i {
    int x = 0, y = 0, z = 0;
    bool operator==(const Vec3i&) const = default;
};

// Periodic integer grid with row-major indexing, z fastest.
struct Grid3 {
    int nx = 0, ny = 0, nz = 0;

    std::int64_t size() const { return std::int64_t(nx) * ny * nz; }
    static int wrap(int v, int n) { v %= n; return v < 0 ? v + n : v; }
    std::int64_t index(int x, int y, int z) const {
        return (std::int64_t(wrap(x, nx)) * ny + wrap(y, ny)) * nz + wrap(z, nz);
    }
    Vec3i coords(std::int64_t i) const {
        return {int(i / (std::int64_t(ny) * nz)), int((i / nz) % ny), int(i % nz)};
    }
};

struct TetraRef {
    Vec3i cell;
    Hand hand = LH;
    bool operator==(const TetraRef&) const = default;
};

struct FacetRef {
    Vec3i cell;
    Hand hand = LH;
    int facet = 0;
    bool operator==(const FacetRef&) const = default;
};

struct LatticeSpec {
    std::array<int, 3> dims{};  // cells per axis; each even and >= 2
    double eps = 0.1;           // lattice spacing (one cell edge)
    // Broken gluings; the builder closes the set under the gluing
    // involution (breaking a facet always breaks its partner).
    std::vector<FacetRef> broken_links;
};

class Lattice {
  public:
    std::array<int, 3> dims{};
    double eps = 0.1;

    // slot = ((cell_index * 2 + hand) * 4 + facet); glue is an involution
    // on slots. Stored explicitly so it can be inspected and certified.
    std::vector<std::uint32_t> glue;
    std::vector<std::uint8_t> broken;

    std::int64_t cell_count() const { return cells_.size(); }
    std::int64_t tetra_count() const { return 2 * cell_count(); }
    std::int64_t slot_count() const { return 8 * cell_count(); }
    bool has_defects() const;

    const Grid3& cells() const { return cells_; }
    // z-doubled facet-site grid (d1, d2, 2*d3).
    const Grid3& sites() const { return sites_; }

    std::int64_t cell_index(const Vec3i& c) const { return cells_.index(c.x, c.y, c.z); }
    Vec3i cell_coords(std::int64_t ci) const { return cells_.coords(ci); }

    std::int64_t tetra_index(const TetraRef& t) const { return cell_index(t.cell) * 2 + t.hand; }
    TetraRef tetra_ref(std::int64_t ti) const { return {cell_coords(ti / 2), Hand(ti % 2)}; }

    std::int64_t slot(const FacetRef& f) const {
        return (cell_index(f.cell) * 2 + f.hand) * 4 + f.facet;
    }
    FacetRef slot_ref(std::int64_t s) const {
        FacetRef f;
        f.facet = int(s % 4);
        f.hand = Hand((s / 4) % 2);
        f.cell = cell_coords(s / 8);
        return f;
    }

    FacetRef glued(const FacetRef& f) const { return slot_ref(glue[slot(f)]); }
    bool is_broken(const FacetRef& f) const { return broken[slot(f)] != 0; }

    int cell_parity(const Vec3i& c) const {
        return (Grid3::wrap(c.x, dims[0]) + Grid3::wrap(c.y, dims[1])) & 1;
    }

    // Site of a facet slot on the doubled grid: facets 0/2 at e(c),
    // facets 1/3 at e(c) + u_z.
    Vec3i slot_site(const FacetRef& f) const {
        const int lift = (f.facet == 1 || f.facet == 3) ? 1 : 0;
        Vec3i s{f.cell.x, f.cell.y, 2 * f.cell.z + cell_parity(f.cell) + lift};
        s.x = Grid3::wrap(s.x, sites_.nx);
        s.y = Grid3::wrap(s.y, sites_.ny);
        s.z = Grid3::wrap(s.z, sites_.nz);
        return s;
    }

    // Cell whose facet-0/2 (even) site is s; s must have even site parity
    // (sx + sy + sz even). Likewise for the facet-1/3 (odd) site.
    Vec3i cell_of_even_site(const Vec3i& s) const;
    Vec3i cell_of_odd_site(const Vec3i& s) const;

    // Cell-transport maps of the per-axis walk, expressed through the site
    // embedding (writing b(c), r(c) for the even/odd sites of cell c):
    //   red_after(c, ax)  : cell c' with r(c') = b(c) + u_ax
    //   red_before(c, ax) : cell c' with r(c') = b(c) - u_ax
    //   blue_after(c, ax) : cell c' with b(c') = r(c) + u_ax
    //   blue_before(c, ax): cell c' with b(c') = r(c) - u_ax
    // For ax = Z these reduce to c, c - z, c + z, c. red_after and
    // blue_before are mutually inverse, as are red_before and blue_after.
    Vec3i red_after(const Vec3i& c, Axis ax) const;
    Vec3i red_before(const Vec3i& c, Axis ax) const;
    Vec3i blue_after(const Vec3i& c, Axis ax) const;
    Vec3i blue_before(const Vec3i& c, Axis ax) const;

  private:
    friend Lattice build_lattice(const LatticeSpec& spec);
    Grid3 cells_;
    Grid3 sites_;
};

// Constructs the lattice from the movement specification (within-cell
// cross-handed 0/1 gluings, z-adjacent same-handed 2/3 gluings), validates
// dimensions, and closes the broken-link set under the involution.
Lattice build_lattice(const LatticeSpec& spec);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> failures;
};

// Certifies a gluing table: (a) involution without fixed points and
// bilateral broken marks, (b) handedness compatibility (facets 0/1 link
// opposite hands, facets 2/3 equal hands), (c) the displacement law of the
// composed z-substep shift extracted as a slot permutation: blue/red
// amplitudes hop exactly one site level, upward for LH and downward for RH.
ValidationReport validate_gluing(const Lattice& lat);

struct DualGraph {
    struct Port {
        std::int64_t node = -1;  // tetra index, -1 when boundary
        int port = -1;           // partner facet id
        bool boundary = false;   // broken gluing: dangling on both sides
    };
    std::vector<TetraRef> nodes;               // indexed by tetra index
    std::vector<std::array<Port, 4>> ports;    // ordered by FacetId
};

// Dual 4-valent graph: one node per tetrahedron, one link per facet
// gluing, ports ordered by facet id; broken gluings become boundary
// markers on both endpoints.
DualGraph dual_graph(const Lattice& lat);

// Edge-list export, one line per intact link:
// "x,y,z,H port x,y,z,H port" with H in {L, R}.
void export_dual_graph(const DualGraph& g, std::ostream& os);

// Deterministic defect sampling: selects floor(fraction * pair_count)
// glued facet pairs with a SplitMix64-seeded partial shuffle and returns
// both slots of every selected pair (involution-closed by construction).
std::vector<FacetRef> sample_broken_links(const std::array<int, 3>& dims,
                                          double fraction, std::uint64_t seed);

// SplitMix64 step; the single PRNG behind every seeded choice.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace tqw
