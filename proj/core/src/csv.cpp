#include "hadamard/csv.hpp"

#include "hadamard/error.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

namespace hadamard::csv {

std::string format_number(double value)
{
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

Table::Table(std::vector<std::string> header)
    : header_(std::move(header))
{
}

void Table::add_row(std::vector<std::string> cells)
{
    if (cells.size() != header_.size()) {
        throw InvalidInput("csv row has " + std::to_string(cells.size()) + " cells, header has "
                           + std::to_string(header_.size()));
    }
    rows_.push_back(std::move(cells));
}

std::string Table::str() const
{
    std::string out;
    auto append = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                out += ',';
            }
            out += cells[i];
        }
        out += '\n';
    };
    append(header_);
    for (const auto& row : rows_) {
        append(row);
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw NumericalFailure("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw NumericalFailure("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace hadamard::csv
