#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"
#include "hadamard/mesh.hpp"

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace hadamard {

void write_mesh(std::ostream& out, const Mesh& mesh)
{
    out << "# topology " << to_string(mesh.topology()) << '\n';
    if (mesh.topology() == Topology::FlatTorus) {
        out << "# period " << csv::format_number(mesh.period().x()) << ' '
            << csv::format_number(mesh.period().y()) << '\n';
    }
    out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << ' '
        << mesh.num_boundary_faces() << '\n';
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        for (Index k = 0; k < mesh.vertices().cols(); ++k) {
            out << (k ? " " : "") << csv::format_number(mesh.vertices()(v, k));
        }
        out << '\n';
    }
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        for (Index k = 0; k < mesh.cells().cols(); ++k) {
            out << (k ? " " : "") << mesh.cells()(c, k);
        }
        out << '\n';
    }
    for (Index f = 0; f < mesh.num_boundary_faces(); ++f) {
        for (Index k = 0; k < mesh.boundary_faces().cols(); ++k) {
            out << mesh.boundary_faces()(f, k) << ' ';
        }
        out << mesh.component_labels()[static_cast<std::size_t>(f)] << '\n';
    }
}

namespace {

std::vector<double> parse_numbers(const std::string& line)
{
    std::istringstream in(line);
    std::vector<double> values;
    double x = 0.0;
    while (in >> x) {
        values.push_back(x);
    }
    if (!in.eof()) {
        throw InvalidInput("mesh file: malformed line '" + line + "'");
    }
    return values;
}

} // namespace

Mesh read_mesh(std::istream& in)
{
    std::string line;
    std::optional<Topology> topology;
    Eigen::Vector2d period = Eigen::Vector2d::Zero();
    std::vector<std::string> body;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream c(line.substr(1));
            std::string key;
            c >> key;
            if (key == "topology") {
                std::string name;
                c >> name;
                topology = topology_from_string(name);
            } else if (key == "period") {
                c >> period.x() >> period.y();
            }
            continue;
        }
        body.push_back(line);
    }
    if (body.empty()) {
        throw InvalidInput("mesh file: missing header line 'dim nv nc nb'");
    }
    const auto header = parse_numbers(body[0]);
    if (header.size() != 4) {
        throw InvalidInput("mesh file: header must be 'dim nv nc nb'");
    }
    const int dim = static_cast<int>(header[0]);
    const Index nv = static_cast<Index>(header[1]);
    const Index nc = static_cast<Index>(header[2]);
    const Index nb = static_cast<Index>(header[3]);
    if (dim != 1 && dim != 2) {
        throw InvalidInput("mesh file: dim must be 1 or 2 (3D FEM is not supported)");
    }
    if (nv < 0 || nc < 0 || nb < 0 || static_cast<Index>(body.size()) != 1 + nv + nc + nb) {
        throw InvalidInput("mesh file: line count does not match the header");
    }

    std::size_t row = 1;
    const auto first = parse_numbers(body[row]);
    const Index ambient = static_cast<Index>(first.size());
    Eigen::MatrixXd vertices(nv, ambient);
    for (Index v = 0; v < nv; ++v, ++row) {
        const auto values = parse_numbers(body[row]);
        if (static_cast<Index>(values.size()) != ambient) {
            throw InvalidInput("mesh file: inconsistent vertex coordinate count");
        }
        for (Index k = 0; k < ambient; ++k) {
            vertices(v, k) = values[static_cast<std::size_t>(k)];
        }
    }
    Eigen::MatrixXi cells(nc, dim + 1);
    for (Index c = 0; c < nc; ++c, ++row) {
        const auto values = parse_numbers(body[row]);
        if (static_cast<int>(values.size()) != dim + 1) {
            throw InvalidInput("mesh file: cell lines need dim+1 indices");
        }
        for (int k = 0; k <= dim; ++k) {
            cells(c, k) = static_cast<int>(values[static_cast<std::size_t>(k)]);
        }
    }
    Eigen::MatrixXi faces(nb, dim);
    std::vector<int> labels(static_cast<std::size_t>(nb));
    for (Index f = 0; f < nb; ++f, ++row) {
        const auto values = parse_numbers(body[row]);
        if (static_cast<int>(values.size()) != dim + 1) {
            throw InvalidInput("mesh file: boundary lines need dim indices and a component label");
        }
        for (int k = 0; k < dim; ++k) {
            faces(f, k) = static_cast<int>(values[static_cast<std::size_t>(k)]);
        }
        labels[static_cast<std::size_t>(f)] = static_cast<int>(values.back());
    }
    if (!topology) {
        topology = dim == 1 ? Topology::Interval : (ambient == 3 ? Topology::Sphere : Topology::Rectangle);
    }
    return Mesh(*topology, std::move(vertices), std::move(cells), std::move(faces), std::move(labels), period);
}

} // namespace hadamard
