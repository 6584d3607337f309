#include "focusfic/cli.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace focusfic::cli {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(std::string_view line, std::size_t line_no, const std::string& source)
{
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    if (quoted) {
        throw DataError(fmt::format("{}: unterminated quote on line {}", source, line_no));
    }
    out.push_back(trim(cell));
    return out;
}

bool blank_line(std::string_view line)
{
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

} // namespace

Dataset parse_csv(std::string_view text, const std::string& response, const std::vector<std::string>& covariates,
                  const std::string& source)
{
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.remove_prefix(3);
    }
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        lines.push_back(text.substr(pos, end - pos));
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    std::size_t header_line = 0;
    while (header_line < lines.size() && blank_line(lines[header_line])) {
        ++header_line;
    }
    if (header_line == lines.size()) {
        throw DataError(fmt::format("{}: no data rows", source));
    }
    const auto header = split_line(lines[header_line], header_line + 1, source);
    std::set<std::string> seen;
    for (const auto& h : header) {
        if (h.empty()) {
            throw DataError(fmt::format("{}: empty column name in header", source));
        }
        if (!seen.insert(h).second) {
            throw DataError(fmt::format("{}: duplicate header '{}'", source, h));
        }
    }
    const auto locate = [&](const std::string& name) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) {
                return j;
            }
        }
        throw DataError(fmt::format("{}: missing column '{}'", source, name));
    };
    const std::size_t resp_col = locate(response);
    std::vector<std::size_t> cov_cols;
    for (const auto& c : covariates) {
        cov_cols.push_back(locate(c));
    }

    std::vector<std::vector<double>> rows;
    std::size_t data_row = 0;
    for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
        if (blank_line(lines[li])) {
            continue;
        }
        ++data_row;
        const auto cells = split_line(lines[li], li + 1, source);
        if (cells.size() != header.size()) {
            throw DataError(fmt::format("{}: row {} has {} cells, expected {}", source, data_row, cells.size(),
                                        header.size()));
        }
        std::vector<double> values;
        const auto read = [&](std::size_t col) {
            const std::string& cell = cells[col];
            if (cell.empty()) {
                throw DataError(fmt::format("{}: blank cell at row {}, column '{}'", source, data_row, header[col]));
            }
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') {
                ++first;
            }
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                throw DataError(fmt::format("{}: non-numeric cell '{}' at row {}, column '{}'", source, cell,
                                            data_row, header[col]));
            }
            values.push_back(v);
        };
        read(resp_col);
        for (auto c : cov_cols) {
            read(c);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw DataError(fmt::format("{}: no data rows", source));
    }
    const auto n = static_cast<Index>(rows.size());
    VectorXd y(n);
    MatrixXd x(n, static_cast<Index>(covariates.size()));
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y(i) = r[0];
        for (Index j = 0; j < x.cols(); ++j) {
            x(i, j) = r[static_cast<std::size_t>(j) + 1];
        }
    }
    return Dataset(std::move(y), std::move(x), covariates);
}

Dataset read_csv(const fs::path& path, const std::string& response, const std::vector<std::string>& covariates)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open data file '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), response, covariates, path.filename().string());
}

} // namespace focusfic::cli
