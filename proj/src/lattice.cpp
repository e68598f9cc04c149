#include "tqw/lattice.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tqw {

Axis cycle_axis(Axis a) {
    switch (a) {
        case Axis::Z: return Axis::X;
        case Axis::X: return Axis::Y;
        case Axis::Y: return Axis::Z;
    }
    throw std::invalid_argument("cycle_axis: bad axis");
}

int direction(const std::array<int, 3>& k) {
    const int px = ((k[0] % 2) + 2) % 2;
    const int py = ((k[1] % 2) + 2) % 2;
    const int pz = ((k[2] % 2) + 2) % 2;
    if (px == py && py == pz) return -1;  // all-even or all-odd: no transport
    if (px == py) return 2;               // (e,e,o) / (o,o,e)
    if (py == pz) return 0;               // (e,o,o) / (o,e,e)
    return 1;                             // (e,o,e) / (o,e,o)
}

namespace {

Vec3i unit(Axis ax) {
    switch (ax) {
        case Axis::X: return {1, 0, 0};
        case Axis::Y: return {0, 1, 0};
        case Axis::Z: return {0, 0, 1};
    }
    throw std::invalid_argument("unit: bad axis");
}

std::string format_facet(const FacetRef& f) {
    std::ostringstream os;
    os << "(" << f.cell.x << "," << f.cell.y << "," << f.cell.z << ","
       << (f.hand == LH ? 'L' : 'R') << ") facet " << f.facet;
    return os.str();
}

}  // namespace

bool Lattice::has_defects() const {
    return std::find(broken.begin(), broken.end(), std::uint8_t(1)) != broken.end();
}

Vec3i Lattice::cell_of_even_site(const Vec3i& s) const {
    if (((s.x + s.y + s.z) & 1) != 0) throw std::invalid_argument("cell_of_even_site: odd site");
    const int par = (Grid3::wrap(s.x, dims[0]) + Grid3::wrap(s.y, dims[1])) & 1;
    return {Grid3::wrap(s.x, dims[0]), Grid3::wrap(s.y, dims[1]),
            Grid3::wrap(s.z - par, sites_.nz) / 2};
}

Vec3i Lattice::cell_of_odd_site(const Vec3i& s) const {
    if (((s.x + s.y + s.z) & 1) == 0) throw std::invalid_argument("cell_of_odd_site: even site");
    const int par = (Grid3::wrap(s.x, dims[0]) + Grid3::wrap(s.y, dims[1])) & 1;
    return {Grid3::wrap(s.x, dims[0]), Grid3::wrap(s.y, dims[1]),
            Grid3::wrap(s.z - par - 1, sites_.nz) / 2};
}

Vec3i Lattice::red_after(const Vec3i& c, Axis ax) const {
    const Vec3i u = unit(ax);
    return cell_of_odd_site({c.x + u.x, c.y + u.y, 2 * c.z + cell_parity(c) + u.z});
}

Vec3i Lattice::red_before(const Vec3i& c, Axis ax) const {
    const Vec3i u = unit(ax);
    return cell_of_odd_site({c.x - u.x, c.y - u.y, 2 * c.z + cell_parity(c) - u.z});
}

Vec3i Lattice::blue_after(const Vec3i& c, Axis ax) const {
    const Vec3i u = unit(ax);
    return cell_of_even_site({c.x + u.x, c.y + u.y, 2 * c.z + cell_parity(c) + 1 + u.z});
}

Vec3i Lattice::blue_before(const Vec3i& c, Axis ax) const {
    const Vec3i u = unit(ax);
    return cell_of_even_site({c.x - u.x, c.y - u.y, 2 * c.z + cell_parity(c) + 1 - u.z});
}

Lattice build_lattice(const LatticeSpec& spec) {
    for (int d : spec.dims) {
        if (d < 2 || d % 2 != 0) {
            std::ostringstream os;
            os << "lattice dims must be even and >= 2, got (" << spec.dims[0] << ","
               << spec.dims[1] << "," << spec.dims[2] << ")";
            throw std::invalid_argument(os.str());
        }
    }
    if (!(spec.eps > 0.0)) throw std::invalid_argument("lattice eps must be > 0");

    Lattice lat;
    lat.dims = spec.dims;
    lat.eps = spec.eps;
    lat.cells_ = {spec.dims[0], spec.dims[1], spec.dims[2]};
    lat.sites_ = {spec.dims[0], spec.dims[1], 2 * spec.dims[2]};
    lat.glue.resize(std::size_t(lat.slot_count()));
    lat.broken.assign(std::size_t(lat.slot_count()), 0);

    for (std::int64_t ci = 0; ci < lat.cell_count(); ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        for (int h = 0; h < 2; ++h) {
            // Cube-internal gluings swap handedness in place; cube-cube
            // gluings chain same-handed tetrahedra along z, facet 3 up to
            // the next cell's facet 2.
            lat.glue[std::size_t(lat.slot({c, Hand(h), 0}))] =
                std::uint32_t(lat.slot({c, Hand(1 - h), 0}));
            lat.glue[std::size_t(lat.slot({c, Hand(h), 1}))] =
                std::uint32_t(lat.slot({c, Hand(1 - h), 1}));
            lat.glue[std::size_t(lat.slot({c, Hand(h), 2}))] =
                std::uint32_t(lat.slot({{c.x, c.y, c.z - 1}, Hand(h), 3}));
            lat.glue[std::size_t(lat.slot({c, Hand(h), 3}))] =
                std::uint32_t(lat.slot({{c.x, c.y, c.z + 1}, Hand(h), 2}));
        }
    }

    for (const FacetRef& f : spec.broken_links) {
        if (f.facet < 0 || f.facet > 3)
            throw std::invalid_argument("broken link facet id out of range");
        const std::int64_t s = lat.slot(f);
        lat.broken[std::size_t(s)] = 1;
        lat.broken[lat.glue[std::size_t(s)]] = 1;
    }
    return lat;
}

ValidationReport validate_gluing(const Lattice& lat) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& msg) {
        rep.ok = false;
        rep.failures.push_back(msg);
    };

    // (a) Involution without fixed points, bilateral broken marks.
    for (std::int64_t s = 0; s < lat.slot_count() && rep.ok; ++s) {
        const std::int64_t p = lat.glue[std::size_t(s)];
        if (p < 0 || p >= lat.slot_count() || p == s ||
            lat.glue[std::size_t(p)] != std::uint32_t(s))
            fail("involution violated at " + format_facet(lat.slot_ref(s)));
        else if (lat.broken[std::size_t(s)] != lat.broken[std::size_t(p)])
            fail("unilateral broken mark at " + format_facet(lat.slot_ref(s)));
    }
    if (!rep.ok) return rep;

    // (b) Handedness and partner-facet compatibility.
    for (std::int64_t s = 0; s < lat.slot_count() && rep.ok; ++s) {
        const FacetRef f = lat.slot_ref(s);
        const FacetRef p = lat.glued(f);
        if (f.facet <= 1) {
            if (p.hand == f.hand || p.facet != f.facet || !(p.cell == f.cell))
                fail("cube-internal gluing not cross-handed in-cell at " + format_facet(f));
        } else {
            if (p.hand != f.hand || p.facet != 5 - f.facet)
                fail("cube-cube gluing not same-handed facet-complementary at " +
                     format_facet(f));
        }
    }
    if (!rep.ok) return rep;

    // (c) Displacement law of the composed z-substep shift, extracted as a
    // slot permutation from the table: blue/red content hops exactly one
    // site level along z, up for LH, down for RH.
    const int nz = lat.sites().nz;
    for (std::int64_t ci = 0; ci < lat.cell_count() && rep.ok; ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        for (int h = 0; h < 2 && rep.ok; ++h) {
            const Hand hand = Hand(h);
            const FacetRef nb = lat.glued({c, hand, hand == LH ? 2 : 3});
            // Composed shift pulls per Eq-pattern: LH blue <- neighbor red,
            // LH red <- own blue; RH blue <- own red, RH red <- neighbor blue.
            const FacetRef blue_src = hand == LH ? FacetRef{nb.cell, nb.hand, 1}
                                                 : FacetRef{c, hand, 1};
            const FacetRef red_src = hand == LH ? FacetRef{c, hand, 0}
                                                : FacetRef{nb.cell, nb.hand, 0};
            const int want = hand == LH ? 1 : nz - 1;
            for (const auto& [dst, src] :
                 {std::pair<FacetRef, FacetRef>{{c, hand, 0}, blue_src},
                  std::pair<FacetRef, FacetRef>{{c, hand, 1}, red_src}}) {
                const Vec3i to = lat.slot_site(dst);
                const Vec3i from = lat.slot_site(src);
                const int dz = Grid3::wrap(to.z - from.z, nz);
                if (to.x != from.x || to.y != from.y || dz != want) {
                    fail("displacement law violated: " + format_facet(dst) +
                         " pulls from " + format_facet(src));
                    break;
                }
            }
        }
    }
    return rep;
}

DualGraph dual_graph(const Lattice& lat) {
    DualGraph g;
    g.nodes.resize(std::size_t(lat.tetra_count()));
    g.ports.resize(std::size_t(lat.tetra_count()));
    for (std::int64_t ti = 0; ti < lat.tetra_count(); ++ti) {
        g.nodes[std::size_t(ti)] = lat.tetra_ref(ti);
        for (int f = 0; f < 4; ++f) {
            const std::int64_t s = ti * 4 + f;
            DualGraph::Port& port = g.ports[std::size_t(ti)][std::size_t(f)];
            if (lat.broken[std::size_t(s)]) {
                port.boundary = true;
            } else {
                const std::int64_t p = lat.glue[std::size_t(s)];
                port.node = p / 4;
                port.port = int(p % 4);
            }
        }
    }
    return g;
}

void export_dual_graph(const DualGraph& g, std::ostream& os) {
    auto put_node = [&os, &g](std::int64_t ti) {
        const TetraRef& t = g.nodes[std::size_t(ti)];
        os << t.cell.x << "," << t.cell.y << "," << t.cell.z << ","
           << (t.hand == LH ? 'L' : 'R');
    };
    for (std::int64_t ti = 0; ti < std::int64_t(g.nodes.size()); ++ti) {
        for (int f = 0; f < 4; ++f) {
            const DualGraph::Port& port = g.ports[std::size_t(ti)][std::size_t(f)];
            if (port.boundary) continue;
            if (ti * 4 + f >= port.node * 4 + port.port) continue;
            put_node(ti);
            os << " " << f << " ";
            put_node(port.node);
            os << " " << port.port << "\n";
        }
    }
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<FacetRef> sample_broken_links(const std::array<int, 3>& dims,
                                          double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("broken-link fraction must lie in [0, 1]");
    const Lattice lat = build_lattice({dims, 1.0, {}});

    std::vector<std::int64_t> pairs;
    pairs.reserve(std::size_t(lat.slot_count() / 2));
    for (std::int64_t s = 0; s < lat.slot_count(); ++s)
        if (std::uint32_t(s) < lat.glue[std::size_t(s)]) pairs.push_back(s);

    const std::size_t count = std::size_t(fraction * double(pairs.size()));
    std::uint64_t state = seed;
    std::vector<FacetRef> out;
    out.reserve(2 * count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + std::size_t(splitmix64(state) % (pairs.size() - i));
        std::swap(pairs[i], pairs[j]);
        out.push_back(lat.slot_ref(pairs[i]));
        out.push_back(lat.slot_ref(std::int64_t(lat.glue[std::size_t(pairs[i])])));
    }
    return out;
}

}  // namespace tqw
