// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

// Prompt templates used at question time. Any edit to the text changes
// request fingerprints, so recorded mock scripts must be re-recorded; bump
// kPromptTemplateVersion alongside such edits.
namespace ca::prompts {

inline constexpr std::string_view kPromptTemplateVersion = "2";

std::string_view routing_system();
std::string_view constraint_system();
std::string_view generation_system();
std::string_view generation_instruction();

} // namespace ca::prompts
