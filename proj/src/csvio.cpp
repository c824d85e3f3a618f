#include "oulab/csvio.hpp"

#include <cstdio>
#include <fstream>

#include "oulab/errors.hpp"

namespace oulab {

const char* const kArtifactVersion = "1.0.0";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     std::uint64_t config_hash, std::uint64_t seed)
    : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw Error(ErrorKind::config, "cannot open for writing: " + path);
    }
    char head[160];
    std::snprintf(head, sizeof head,
                  "# oulab v%s config_hash=%016llx seed=%llu\n", kArtifactVersion,
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed));
    impl_->out << head;
    for (std::size_t i = 0; i < columns.size(); ++i)
        impl_->out << (i ? "," : "") << columns[i];
    impl_->out << "\n";
}

CsvWriter::~CsvWriter() {
    close();
    delete impl_;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        impl_->out << (i ? "," : "") << cells[i];
    impl_->out << "\n";
}

void CsvWriter::row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void CsvWriter::close() {
    if (impl_->out.is_open()) impl_->out.close();
}

}  // namespace oulab
