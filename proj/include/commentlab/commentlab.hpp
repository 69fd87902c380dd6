#pragma once

#include "annotation.hpp"
#include "corpus.hpp"
#include "embed.hpp"
#include "error.hpp"
#include "guideline.hpp"
#include "hope.hpp"
#include "intent.hpp"
#include "langid.hpp"
#include "text.hpp"
#include "timeutil.hpp"
