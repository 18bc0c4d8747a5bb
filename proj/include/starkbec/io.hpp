#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "starkbec/common.hpp"

namespace starkbec {

/// CSV writer emitting full-precision doubles so reruns are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);

private:
    std::ofstream out_;
    std::size_t columns_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace starkbec
