#pragma once

#include <string_view>

// Text files under assets/, compiled into the library.
namespace tell::assets {

std::string_view builtin_templates();
std::string_view augmentation_prompt();
std::string_view augmentation_format();
std::string_view paraphrase_prompt();
std::string_view paraphrase_format();
std::string_view paraphrase_exemplars();
std::string_view enrichment_prompt();

}  // namespace tell::assets
