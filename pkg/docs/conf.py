#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# nvllc documentation build configuration file.

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import nvllc  # noqa: E402

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'nvllc'
copyright = u"2026, nvllc developers"
author = u"nvllc developers"

version = nvllc.__version__
release = nvllc.__version__

language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'nvllcdoc'

latex_documents = [
    (master_doc, 'nvllc.tex',
     u'nvllc Documentation',
     u'nvllc developers', 'manual'),
]

man_pages = [
    (master_doc, 'nvllc',
     u'nvllc Documentation',
     [author], 1)
]

texinfo_documents = [
    (master_doc, 'nvllc',
     u'nvllc Documentation',
     author,
     'nvllc',
     'Lifetime forecasting of degradable non-volatile last-level caches.',
     'Miscellaneous'),
]
