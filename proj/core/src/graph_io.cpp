#include "gnnbias/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "gnnbias/error.hpp"
#include "json.hpp"

namespace gnnbias {

using nlohmann::json;

namespace {

Graph graph_from_json(const json& j) {
  const auto n = j.at("n").get<std::size_t>();
  auto colors = j.at("colors").get<std::vector<Color>>();
  if (colors.size() != n) throw ParseError("colors length does not match n");
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a pair");
    edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
  }
  Graph g(std::move(colors), edges);
  if (j.contains("label") && !j.at("label").is_null()) g.set_label(j.at("label").get<int>());
  if (j.contains("anchor") && !j.at("anchor").is_null()) {
    g.set_anchor(j.at("anchor").get<std::vector<NodeId>>());
  }
  return g;
}

}  // namespace

std::string graph_to_json_line(const Graph& g) {
  json j;
  j["n"] = g.num_nodes();
  j["colors"] = g.colors();
  json edges = json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["label"] = g.label() ? json(*g.label()) : json(nullptr);
  j["anchor"] = g.anchor() ? json(*g.anchor()) : json(nullptr);
  return j.dump();
}

Graph graph_from_json_line(std::string_view line) {
  try {
    return graph_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

std::vector<Graph> read_graphs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Graph> graphs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      graphs.push_back(graph_from_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return graphs;
}

void write_graphs_jsonl(const std::filesystem::path& path, const std::vector<Graph>& graphs) {
  std::string out;
  for (const auto& g : graphs) {
    out += graph_to_json_line(g);
    out += '\n';
  }
  write_text_file(path, out);
}

std::string pattern_to_json(const Pattern& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind()));
  j["size"] = p.size();
  j["colors"] = p.colors();
  json edges = json::array();
  for (const auto& [a, b] : p.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  return j.dump(2);
}

Pattern pattern_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    Pattern p(pattern_kind_from_string(j.at("kind").get<std::string>()),
              j.at("colors").get<std::vector<Color>>(), std::move(edges));
    if (j.contains("size") && j.at("size").get<std::size_t>() != p.size()) {
      throw ParseError("pattern size does not match colors");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pattern: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("pattern: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gnnbias
