#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gnnbias/graph.hpp"

namespace gnnbias {

/// One JSON-lines record:
/// {"n": int, "colors": [int], "edges": [[i,j],...], "label": 0|1|null, "anchor": [int]|null}
/// Edges are written once with i < j; readers symmetrize.
std::string graph_to_json_line(const Graph& g);
Graph graph_from_json_line(std::string_view line);

/// Reads every non-blank line. ParseError messages carry "path:line".
std::vector<Graph> read_graphs_jsonl(const std::filesystem::path& path);
void write_graphs_jsonl(const std::filesystem::path& path, const std::vector<Graph>& graphs);

std::string pattern_to_json(const Pattern& p);
Pattern pattern_from_json(std::string_view text);

/// Whole-file helpers. Throw IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace gnnbias
