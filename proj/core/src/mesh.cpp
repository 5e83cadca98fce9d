#include "hadamard/mesh.hpp"

#include "hadamard/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <string>

namespace hadamard {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_offset(double delta, double period)
{
    if (period <= 0.0) {
        return delta;
    }
    return delta - period * std::round(delta / period);
}

int find_root(std::vector<int>& parent, int x)
{
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

} // namespace

std::string_view to_string(Topology topology)
{
    switch (topology) {
    case Topology::Interval: return "interval";
    case Topology::Rectangle: return "rectangle";
    case Topology::Disk: return "disk";
    case Topology::Annulus: return "annulus";
    case Topology::FlatTorus: return "flat-torus";
    case Topology::Sphere: return "sphere";
    }
    return "unknown";
}

Topology topology_from_string(std::string_view name)
{
    if (name == "interval") return Topology::Interval;
    if (name == "rectangle" || name == "square") return Topology::Rectangle;
    if (name == "disk") return Topology::Disk;
    if (name == "annulus") return Topology::Annulus;
    if (name == "flat-torus" || name == "torus") return Topology::FlatTorus;
    if (name == "sphere" || name == "sphere-embedded" || name == "icosphere") return Topology::Sphere;
    if (name == "ball" || name == "box" || name == "cube" || name == "sphere3" || name == "s3"
        || name == "torus3") {
        throw InvalidInput("domain kind '" + std::string(name)
                           + "' is three-dimensional; 3D cases are only available through the "
                             "analytic ricci-flow path");
    }
    throw InvalidInput("unknown domain kind '" + std::string(name) + "'");
}

Mesh::Mesh(Topology topology,
           Eigen::MatrixXd vertices,
           Eigen::MatrixXi cells,
           Eigen::MatrixXi boundary_faces,
           std::vector<int> component_labels,
           Eigen::Vector2d period)
    : topology_(topology)
    , vertices_(std::move(vertices))
    , cells_(std::move(cells))
    , faces_(std::move(boundary_faces))
    , labels_(std::move(component_labels))
    , period_(period)
{
    const int d = static_cast<int>(cells_.cols()) - 1;
    if (d != 1 && d != 2) {
        throw InvalidInput("mesh cells must be segments or triangles");
    }
    const bool sphere = topology_ == Topology::Sphere;
    if ((topology_ == Topology::Interval) != (d == 1)) {
        throw InvalidInput("interval meshes and only interval meshes are one-dimensional");
    }
    const int expected_ambient = sphere ? 3 : d;
    if (vertices_.cols() != expected_ambient) {
        throw InvalidInput("mesh '" + std::string(to_string(topology_)) + "' expects "
                           + std::to_string(expected_ambient) + " coordinates per vertex");
    }
    if (cells_.rows() == 0) {
        throw InvalidInput("mesh has no cells");
    }
    if (faces_.rows() > 0 && faces_.cols() != d) {
        throw InvalidInput("boundary faces must have " + std::to_string(d) + " vertices");
    }
    if (static_cast<Index>(labels_.size()) != faces_.rows()) {
        throw InvalidInput("one component label is required per boundary face");
    }
    if (topology_ == Topology::FlatTorus) {
        if (faces_.rows() != 0) {
            throw InvalidInput("flat-torus meshes have no boundary faces");
        }
        if (!(period_.x() > 0.0 && period_.y() > 0.0)) {
            throw InvalidInput("flat-torus meshes need positive periods");
        }
    } else {
        period_.setZero();
    }
    if (sphere && faces_.rows() != 0) {
        throw InvalidInput("sphere meshes have no boundary faces");
    }
    const Index nv = vertices_.rows();
    for (Index c = 0; c < cells_.rows(); ++c) {
        for (Index a = 0; a < cells_.cols(); ++a) {
            if (cells_(c, a) < 0 || cells_(c, a) >= nv) {
                throw InvalidInput("cell " + std::to_string(c) + " references a missing vertex");
            }
        }
    }
    for (Index f = 0; f < faces_.rows(); ++f) {
        for (Index a = 0; a < faces_.cols(); ++a) {
            if (faces_(f, a) < 0 || faces_(f, a) >= nv) {
                throw InvalidInput("boundary face " + std::to_string(f) + " references a missing vertex");
            }
        }
    }
    if (!vertices_.allFinite()) {
        throw InvalidInput("mesh vertex coordinates must be finite");
    }
    build_charts();
    attach_faces();
}

SmallVec Mesh::cell_vertex(Index cell, int corner) const
{
    const int v = cells_(cell, corner);
    SmallVec x = vertices_.row(v).transpose();
    if (topology_ == Topology::FlatTorus && corner != 0) {
        const int v0 = cells_(cell, 0);
        for (int k = 0; k < 2; ++k) {
            const double base = vertices_(v0, k);
            x(k) = base + wrap_offset(x(k) - base, period_(k));
        }
    }
    return x;
}

SmallVec Mesh::centroid(Index cell) const
{
    SmallVec sum = SmallVec::Zero(ambient_dim());
    for (int a = 0; a <= dim(); ++a) {
        sum += cell_vertex(cell, a);
    }
    return sum / static_cast<double>(dim() + 1);
}

int Mesh::local_index(Index cell, int vertex) const
{
    for (int a = 0; a < cells_.cols(); ++a) {
        if (cells_(cell, a) == vertex) {
            return a;
        }
    }
    return -1;
}

void Mesh::build_charts()
{
    const int d = dim();
    charts_.resize(static_cast<std::size_t>(cells_.rows()));
    SmallMat reference(d, d + 1);
    reference.setZero();
    for (int r = 0; r < d; ++r) {
        reference(r, 0) = -1.0;
        reference(r, r + 1) = 1.0;
    }
    const double factorial = d == 1 ? 1.0 : 2.0;

    for (Index c = 0; c < cells_.rows(); ++c) {
        CellChart& chart = charts_[static_cast<std::size_t>(c)];
        if (topology_ == Topology::Sphere) {
            const Eigen::Vector3d p0 = vertices_.row(cells_(c, 0)).transpose();
            const Eigen::Vector3d e1 = vertices_.row(cells_(c, 1)).transpose() - p0;
            const Eigen::Vector3d e2 = vertices_.row(cells_(c, 2)).transpose() - p0;
            const double area = 0.5 * e1.cross(e2).norm();
            if (!(area > 1e-300)) {
                throw InvalidInput("degenerate cell " + std::to_string(c) + " (zero area facet)");
            }
            chart.local = SmallMat::Zero(3, 2);
            chart.local(1, 0) = 1.0;
            chart.local(2, 1) = 1.0;
            chart.gradients = reference;
            chart.chart_volume = 0.5;
            continue;
        }

        SmallMat edges(d, d);
        SmallVec x0 = cell_vertex(c, 0);
        for (int a = 1; a <= d; ++a) {
            edges.col(a - 1) = cell_vertex(c, a) - x0;
        }
        double det = edges.determinant();
        const double scale = edges.cwiseAbs().maxCoeff();
        if (!(std::abs(det) > 1e-14 * std::pow(scale, d))) {
            throw InvalidInput("degenerate cell " + std::to_string(c) + " (zero chart volume)");
        }
        if (det < 0.0) {
            // Restore positive orientation by swapping the last two corners.
            std::swap(cells_(c, d - 1), cells_(c, d));
            x0 = cell_vertex(c, 0);
            for (int a = 1; a <= d; ++a) {
                edges.col(a - 1) = cell_vertex(c, a) - x0;
            }
            det = edges.determinant();
        }
        chart.local.resize(d + 1, d);
        for (int a = 0; a <= d; ++a) {
            chart.local.row(a) = cell_vertex(c, a).transpose();
        }
        chart.gradients = edges.transpose().inverse() * reference;
        chart.chart_volume = det / factorial;
    }
}

void Mesh::attach_faces()
{
    const Index nv = vertices_.rows();
    on_boundary_.assign(static_cast<std::size_t>(nv), false);
    face_cells_.assign(static_cast<std::size_t>(faces_.rows()), -1);
    if (faces_.rows() == 0) {
        num_components_ = 0;
        return;
    }

    std::map<std::array<int, 2>, Index> face_owner;
    std::map<std::array<int, 2>, int> face_count;
    const int d = dim();
    for (Index c = 0; c < cells_.rows(); ++c) {
        for (int skip = 0; skip <= d; ++skip) {
            std::array<int, 2> key{-1, -1};
            int k = 0;
            for (int a = 0; a <= d; ++a) {
                if (a != skip) {
                    key[static_cast<std::size_t>(k++)] = cells_(c, a);
                }
            }
            if (key[1] >= 0 && key[0] > key[1]) {
                std::swap(key[0], key[1]);
            }
            face_owner[key] = c;
            ++face_count[key];
        }
    }

    for (Index f = 0; f < faces_.rows(); ++f) {
        std::array<int, 2> key{faces_(f, 0), d == 2 ? faces_(f, 1) : -1};
        if (key[1] >= 0 && key[0] > key[1]) {
            std::swap(key[0], key[1]);
        }
        auto it = face_owner.find(key);
        if (it == face_owner.end() || face_count[key] != 1) {
            throw InvalidInput("boundary face " + std::to_string(f)
                               + " is not a face of exactly one cell");
        }
        const Index c = it->second;
        face_cells_[static_cast<std::size_t>(f)] = c;
        if (d == 2) {
            // Domain on the left: (a, b) must follow the counter-clockwise cell order.
            const int ia = local_index(c, faces_(f, 0));
            const int ib = local_index(c, faces_(f, 1));
            if ((ia + 1) % 3 != ib) {
                std::swap(faces_(f, 0), faces_(f, 1));
            }
        }
        for (Index a = 0; a < faces_.cols(); ++a) {
            on_boundary_[static_cast<std::size_t>(faces_(f, a))] = true;
        }
    }

    // component labels must coincide with connected components of the boundary
    std::vector<int> parent(static_cast<std::size_t>(faces_.rows()));
    std::iota(parent.begin(), parent.end(), 0);
    std::map<int, int> first_face_at_vertex;
    for (Index f = 0; f < faces_.rows(); ++f) {
        for (Index a = 0; a < faces_.cols(); ++a) {
            auto [it, inserted] = first_face_at_vertex.emplace(faces_(f, a), static_cast<int>(f));
            if (!inserted) {
                const int r1 = find_root(parent, it->second);
                const int r2 = find_root(parent, static_cast<int>(f));
                parent[static_cast<std::size_t>(r1)] = r2;
            }
        }
    }
    std::map<int, int> label_of_root;
    std::map<int, int> root_of_label;
    int max_label = -1;
    for (Index f = 0; f < faces_.rows(); ++f) {
        const int label = labels_[static_cast<std::size_t>(f)];
        if (label < 0) {
            throw InvalidInput("component labels must be non-negative");
        }
        const int root = find_root(parent, static_cast<int>(f));
        auto [lit, new_root] = label_of_root.emplace(root, label);
        auto [rit, new_label] = root_of_label.emplace(label, root);
        if (lit->second != label || rit->second != root) {
            throw InvalidInput("component labels do not match the connected components of the boundary");
        }
        (void)new_root;
        (void)new_label;
        max_label = std::max(max_label, label);
    }
    if (static_cast<int>(root_of_label.size()) != max_label + 1) {
        throw InvalidInput("component labels must be numbered 0..k-1 without gaps");
    }
    num_components_ = max_label + 1;
}

Mesh make_interval(double a, double b, int cells)
{
    if (cells < 4) {
        throw InvalidInput("interval resolution must be at least 4 cells");
    }
    if (!(b > a)) {
        throw InvalidInput("interval needs a < b");
    }
    Eigen::MatrixXd v(cells + 1, 1);
    for (int i = 0; i <= cells; ++i) {
        v(i, 0) = a + (b - a) * static_cast<double>(i) / cells;
    }
    Eigen::MatrixXi c(cells, 2);
    for (int i = 0; i < cells; ++i) {
        c(i, 0) = i;
        c(i, 1) = i + 1;
    }
    Eigen::MatrixXi f(2, 1);
    f << 0, cells;
    return Mesh(Topology::Interval, std::move(v), std::move(c), std::move(f), {0, 1});
}

Mesh make_rectangle(double x0, double x1, double y0, double y1, int n, GridPattern pattern)
{
    if (n < 4) {
        throw InvalidInput("rectangle resolution must be at least 4 cells per side");
    }
    if (!(x1 > x0) || !(y1 > y0)) {
        throw InvalidInput("rectangle needs positive side lengths");
    }
    const bool criss = pattern == GridPattern::CrissCross;
    const int corners = (n + 1) * (n + 1);
    const int nv = corners + (criss ? n * n : 0);
    Eigen::MatrixXd v(nv, 2);
    const double hx = (x1 - x0) / n;
    const double hy = (y1 - y0) / n;
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            v(id(i, j), 0) = x0 + hx * i;
            v(id(i, j), 1) = y0 + hy * j;
        }
    }
    Eigen::MatrixXi c((criss ? 4 : 2) * n * n, 3);
    int t = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = id(i, j), b = id(i + 1, j), d = id(i + 1, j + 1), e = id(i, j + 1);
            if (criss) {
                const int m = corners + j * n + i;
                v(m, 0) = x0 + hx * (i + 0.5);
                v(m, 1) = y0 + hy * (j + 0.5);
                c.row(t++) << a, b, m;
                c.row(t++) << b, d, m;
                c.row(t++) << d, e, m;
                c.row(t++) << e, a, m;
            } else {
                c.row(t++) << a, b, d;
                c.row(t++) << a, d, e;
            }
        }
    }
    Eigen::MatrixXi f(4 * n, 2);
    int k = 0;
    for (int i = 0; i < n; ++i) f.row(k++) << id(i, 0), id(i + 1, 0);
    for (int j = 0; j < n; ++j) f.row(k++) << id(n, j), id(n, j + 1);
    for (int i = n; i > 0; --i) f.row(k++) << id(i, n), id(i - 1, n);
    for (int j = n; j > 0; --j) f.row(k++) << id(0, j), id(0, j - 1);
    return Mesh(Topology::Rectangle, std::move(v), std::move(c), std::move(f),
                std::vector<int>(static_cast<std::size_t>(4 * n), 0));
}

Mesh make_disk(double radius, int rings)
{
    if (rings < 4) {
        throw InvalidInput("disk resolution must be at least 4 rings");
    }
    if (!(radius > 0.0)) {
        throw InvalidInput("disk radius must be positive");
    }
    const int nv = 1 + 3 * rings * (rings + 1);
    Eigen::MatrixXd v(nv, 2);
    std::vector<int> ring_start(static_cast<std::size_t>(rings + 1));
    v.row(0) << 0.0, 0.0;
    ring_start[0] = 0;
    int next = 1;
    for (int i = 1; i <= rings; ++i) {
        ring_start[static_cast<std::size_t>(i)] = next;
        const int m = 6 * i;
        const double r = radius * static_cast<double>(i) / rings;
        for (int j = 0; j < m; ++j) {
            const double theta = 2.0 * kPi * j / m;
            v.row(next++) << r * std::cos(theta), r * std::sin(theta);
        }
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(6 * rings * rings));
    for (int j = 0; j < 6; ++j) {
        tris.push_back({0, 1 + j, 1 + (j + 1) % 6});
    }
    for (int i = 2; i <= rings; ++i) {
        const int m0 = 6 * (i - 1), m1 = 6 * i;
        const int s0 = ring_start[static_cast<std::size_t>(i - 1)];
        const int s1 = ring_start[static_cast<std::size_t>(i)];
        int a = 0, b = 0;
        while (a < m0 || b < m1) {
            // advance along the ring whose next vertex has the smaller angle
            const bool outer = a == m0 || (b < m1 && static_cast<long>(b + 1) * m0 <= static_cast<long>(a + 1) * m1);
            if (outer) {
                tris.push_back({s0 + a % m0, s1 + b % m1, s1 + (b + 1) % m1});
                ++b;
            } else {
                tris.push_back({s0 + a % m0, s1 + b % m1, s0 + (a + 1) % m0});
                ++a;
            }
        }
    }
    Eigen::MatrixXi c(static_cast<Index>(tris.size()), 3);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        c.row(static_cast<Index>(t)) << tris[t][0], tris[t][1], tris[t][2];
    }
    const int mb = 6 * rings;
    const int sb = ring_start[static_cast<std::size_t>(rings)];
    Eigen::MatrixXi f(mb, 2);
    for (int j = 0; j < mb; ++j) {
        f.row(j) << sb + j, sb + (j + 1) % mb;
    }
    return Mesh(Topology::Disk, std::move(v), std::move(c), std::move(f),
                std::vector<int>(static_cast<std::size_t>(mb), 0));
}

Mesh make_annulus(double r_inner, double r_outer, int layers)
{
    if (layers < 4) {
        throw InvalidInput("annulus resolution must be at least 4 radial layers");
    }
    if (!(r_inner > 0.0) || !(r_outer > r_inner)) {
        throw InvalidInput("annulus needs 0 < r_inner < r_outer");
    }
    const double dr = (r_outer - r_inner) / layers;
    const int m = std::max(12, static_cast<int>(std::lround(kPi * (r_inner + r_outer) / dr)));
    Eigen::MatrixXd v((layers + 1) * m, 2);
    auto id = [m](int i, int j) { return i * m + (j % m); };
    for (int i = 0; i <= layers; ++i) {
        const double r = r_inner + dr * i;
        for (int j = 0; j < m; ++j) {
            const double theta = 2.0 * kPi * j / m;
            v.row(id(i, j)) << r * std::cos(theta), r * std::sin(theta);
        }
    }
    Eigen::MatrixXi c(2 * layers * m, 3);
    int t = 0;
    for (int i = 0; i < layers; ++i) {
        for (int j = 0; j < m; ++j) {
            c.row(t++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
            c.row(t++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
        }
    }
    Eigen::MatrixXi f(2 * m, 2);
    std::vector<int> labels(static_cast<std::size_t>(2 * m));
    for (int j = 0; j < m; ++j) {
        f.row(j) << id(layers, j), id(layers, j + 1);
        labels[static_cast<std::size_t>(j)] = 0;
        f.row(m + j) << id(0, m - j), id(0, m - j - 1);
        labels[static_cast<std::size_t>(m + j)] = 1;
    }
    return Mesh(Topology::Annulus, std::move(v), std::move(c), std::move(f), std::move(labels));
}

Mesh make_flat_torus(double lx, double ly, int n)
{
    if (n < 4) {
        throw InvalidInput("torus resolution must be at least 4 cells per side");
    }
    if (!(lx > 0.0) || !(ly > 0.0)) {
        throw InvalidInput("torus side lengths must be positive");
    }
    Eigen::MatrixXd v(n * n, 2);
    auto id = [n](int i, int j) { return (j % n) * n + (i % n); };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            v.row(id(i, j)) << lx * i / n, ly * j / n;
        }
    }
    Eigen::MatrixXi c(2 * n * n, 3);
    int t = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            c.row(t++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
            c.row(t++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
        }
    }
    return Mesh(Topology::FlatTorus, std::move(v), std::move(c), Eigen::MatrixXi(0, 2), {},
                Eigen::Vector2d(lx, ly));
}

Mesh make_icosphere(double radius, int subdivisions)
{
    if (subdivisions < 0 || subdivisions > 7) {
        throw InvalidInput("icosphere subdivision level must lie in [0, 7]");
    }
    if (!(radius > 0.0)) {
        throw InvalidInput("sphere radius must be positive");
    }
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> pts = {
        {-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
        {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    for (auto& p : pts) {
        p.normalize();
    }
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) {
                return it->second;
            }
            pts.push_back((pts[static_cast<std::size_t>(a)] + pts[static_cast<std::size_t>(b)]).normalized());
            const int id = static_cast<int>(pts.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> refined;
        refined.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            refined.push_back({f[0], ab, ca});
            refined.push_back({f[1], bc, ab});
            refined.push_back({f[2], ca, bc});
            refined.push_back({ab, bc, ca});
        }
        faces = std::move(refined);
    }
    Eigen::MatrixXd v(static_cast<Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        v.row(static_cast<Index>(i)) = radius * pts[i].transpose();
    }
    Eigen::MatrixXi c(static_cast<Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) {
        c.row(static_cast<Index>(i)) << faces[i][0], faces[i][1], faces[i][2];
    }
    return Mesh(Topology::Sphere, std::move(v), std::move(c), Eigen::MatrixXi(0, 2), {});
}

namespace {

double size_at(const DomainSpec& spec, std::size_t i, double fallback)
{
    return i < spec.size.size() ? spec.size[i] : fallback;
}

void require_positive(const DomainSpec& spec)
{
    for (double s : spec.size) {
        if (!std::isfinite(s)) {
            throw InvalidInput("domain size parameters must be finite");
        }
    }
}

} // namespace

Mesh build_canonical(const DomainSpec& spec)
{
    require_positive(spec);
    switch (spec.kind) {
    case Topology::Interval:
        if (spec.size.size() == 1) {
            if (!(spec.size[0] > 0.0)) throw InvalidInput("interval length must be positive");
            return make_interval(0.0, spec.size[0], spec.resolution);
        }
        if (spec.size.size() != 2) throw InvalidInput("interval size must be {L} or {a, b}");
        return make_interval(spec.size[0], spec.size[1], spec.resolution);
    case Topology::Rectangle:
        if (spec.size.size() == 2) {
            return make_rectangle(0.0, spec.size[0], 0.0, spec.size[1], spec.resolution, spec.pattern);
        }
        if (spec.size.size() != 4) throw InvalidInput("rectangle size must be {Lx, Ly} or {x0, x1, y0, y1}");
        return make_rectangle(spec.size[0], spec.size[1], spec.size[2], spec.size[3], spec.resolution,
                              spec.pattern);
    case Topology::Disk:
        if (spec.size.size() > 1) throw InvalidInput("disk size must be {R}");
        return make_disk(size_at(spec, 0, 1.0), spec.resolution);
    case Topology::Annulus:
        if (spec.size.size() != 2) throw InvalidInput("annulus size must be {r_inner, r_outer}");
        return make_annulus(spec.size[0], spec.size[1], spec.resolution);
    case Topology::FlatTorus: {
        if (spec.size.empty() || spec.size.size() > 2) throw InvalidInput("torus size must be {L} or {Lx, Ly}");
        const double lx = spec.size[0];
        return make_flat_torus(lx, size_at(spec, 1, lx), spec.resolution);
    }
    case Topology::Sphere:
        if (spec.size.size() > 1) throw InvalidInput("sphere size must be {R}");
        return make_icosphere(size_at(spec, 0, 1.0), spec.resolution);
    }
    throw InvalidInput("unknown domain kind");
}

double analytic_volume(const DomainSpec& spec)
{
    switch (spec.kind) {
    case Topology::Interval:
        return spec.size.size() == 1 ? spec.size[0] : spec.size.at(1) - spec.size.at(0);
    case Topology::Rectangle:
        return spec.size.size() == 2 ? spec.size[0] * spec.size[1]
                                     : (spec.size.at(1) - spec.size.at(0)) * (spec.size.at(3) - spec.size.at(2));
    case Topology::Disk: {
        const double r = size_at(spec, 0, 1.0);
        return kPi * r * r;
    }
    case Topology::Annulus:
        return kPi * (spec.size.at(1) * spec.size.at(1) - spec.size.at(0) * spec.size.at(0));
    case Topology::FlatTorus:
        return spec.size.at(0) * size_at(spec, 1, spec.size.at(0));
    case Topology::Sphere: {
        const double r = size_at(spec, 0, 1.0);
        return 4.0 * kPi * r * r;
    }
    }
    return 0.0;
}

const char* to_string(BoundaryCondition bc)
{
    return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "t-neumann";
}

BoundaryCondition boundary_condition_from_string(const char* name)
{
    const std::string s(name);
    if (s == "dirichlet") return BoundaryCondition::Dirichlet;
    if (s == "t-neumann" || s == "neumann") return BoundaryCondition::TNeumann;
    throw InvalidInput("unknown boundary condition '" + s + "'");
}

} // namespace hadamard
