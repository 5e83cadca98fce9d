#pragma once

#include "hadamard/types.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard {

enum class Topology { Interval, Rectangle, Disk, Annulus, FlatTorus, Sphere };

std::string_view to_string(Topology topology);
/// Accepts the names printed by to_string. Three-dimensional requests
/// ("ball", "box", "sphere3", ...) are rejected: those cases live in the
/// analytic Ricci-flow path only.
Topology topology_from_string(std::string_view name);

/// Triangulation pattern for rectangles. Criss-cross splits each square
/// into four triangles through its centre and keeps the full symmetry
/// group of a square grid, so symmetric multiplets stay exactly degenerate.
enum class GridPattern { Diagonal, CrissCross };

/// Chart data of one simplex, computed once at mesh construction.
struct CellChart
{
    /// Row r holds d/dx^r of the P1 hat functions, one column per local vertex.
    SmallMat gradients;
    /// Lebesgue measure of the simplex in chart coordinates.
    double chart_volume = 0.0;
    /// Local chart coordinates of the vertices, one row per vertex.
    SmallMat local;
};

/// Simplicial mesh of an interval, a planar domain, a flat torus or an
/// embedded sphere.
///
/// Chart meshes (every topology except Sphere) use the vertex coordinates
/// as a global chart. Torus cells are unwrapped across the periodic seam.
/// Sphere vertices live in R^3 and every facet uses its own affine
/// reference chart with local coordinates (0,0), (1,0), (0,1).
///
/// Boundary faces are vertex indices (one for intervals, two for edges)
/// oriented so that the domain lies to the left of the edge direction.
class Mesh
{
public:
    Mesh(Topology topology,
         Eigen::MatrixXd vertices,
         Eigen::MatrixXi cells,
         Eigen::MatrixXi boundary_faces,
         std::vector<int> component_labels,
         Eigen::Vector2d period = Eigen::Vector2d::Zero());

    Topology topology() const { return topology_; }
    int dim() const { return static_cast<int>(cells_.cols()) - 1; }
    int ambient_dim() const { return static_cast<int>(vertices_.cols()); }
    /// True when the vertex coordinates are a global chart.
    bool has_global_chart() const { return topology_ != Topology::Sphere; }

    Index num_vertices() const { return vertices_.rows(); }
    Index num_cells() const { return cells_.rows(); }
    Index num_boundary_faces() const { return faces_.rows(); }
    int num_components() const { return num_components_; }

    const Eigen::MatrixXd& vertices() const { return vertices_; }
    const Eigen::MatrixXi& cells() const { return cells_; }
    const Eigen::MatrixXi& boundary_faces() const { return faces_; }
    const std::vector<int>& component_labels() const { return labels_; }
    /// The unique cell adjacent to each boundary face.
    const std::vector<Index>& face_cells() const { return face_cells_; }
    const std::vector<bool>& boundary_vertices() const { return on_boundary_; }
    const Eigen::Vector2d& period() const { return period_; }

    const CellChart& chart(Index cell) const { return charts_[static_cast<std::size_t>(cell)]; }

    /// Centroid in vertex-coordinate space (unwrapped for the torus).
    SmallVec centroid(Index cell) const;
    /// Coordinates of local vertex `corner` of `cell`, unwrapped relative to
    /// the first vertex on the torus.
    SmallVec cell_vertex(Index cell, int corner) const;
    /// Index of the local corner of `cell` that holds `vertex`, or -1.
    int local_index(Index cell, int vertex) const;

private:
    void build_charts();
    void attach_faces();

    Topology topology_;
    Eigen::MatrixXd vertices_;
    Eigen::MatrixXi cells_;
    Eigen::MatrixXi faces_;
    std::vector<int> labels_;
    Eigen::Vector2d period_;
    int num_components_ = 0;
    std::vector<CellChart> charts_;
    std::vector<Index> face_cells_;
    std::vector<bool> on_boundary_;
};

/// Canonical domain request. `size` meaning per kind:
///   interval  {a, b} or {L} for (0, L)
///   rectangle {x0, x1, y0, y1} or {Lx, Ly} for [0,Lx]x[0,Ly]
///   disk      {R}
///   annulus   {r_inner, r_outer}
///   flat-torus {L} or {Lx, Ly}
///   sphere    {R} (optional, default 1)
/// `resolution` is cells per side (interval, rectangle, torus), number of
/// rings (disk), radial layers (annulus) or icosphere subdivision level.
struct DomainSpec
{
    Topology kind = Topology::Interval;
    std::vector<double> size;
    int resolution = 0;
    GridPattern pattern = GridPattern::CrissCross;
};

Mesh build_canonical(const DomainSpec& spec);

Mesh make_interval(double a, double b, int cells);
Mesh make_rectangle(double x0, double x1, double y0, double y1, int n, GridPattern pattern);
Mesh make_disk(double radius, int rings);
Mesh make_annulus(double r_inner, double r_outer, int layers);
Mesh make_flat_torus(double lx, double ly, int n);
Mesh make_icosphere(double radius, int subdivisions);

/// Analytic volume (length/area) of the canonical domain.
double analytic_volume(const DomainSpec& spec);

/// Plain-text mesh format:
///   # topology <name>           optional, defaults from dim/coordinate count
///   # period <Lx> <Ly>          flat torus only
///   dim nv nc nb
///   nv vertex coordinate lines
///   nc cell lines (dim+1 vertex indices)
///   nb boundary lines (dim vertex indices, component label)
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

} // namespace hadamard
