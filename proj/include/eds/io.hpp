#pragma once

#include "eds/exterior.hpp"

#include <json.hpp>

#include <string>

namespace eds {

// TOML or JSON document, chosen by file extension (.json, else TOML)
nlohmann::json load_document(const std::string& path);
nlohmann::json load_document_text(const std::string& text, bool is_json);

Workspace workspace_from_json(const nlohmann::json& j);
nlohmann::json workspace_json(const Workspace& ws);

}  // namespace eds
