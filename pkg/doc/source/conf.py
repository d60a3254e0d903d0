# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
# http://www.sphinx-doc.org/en/master/config

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

# -- Project information -----------------------------------------------
project = u'Distributed rolling window tracking'
copyright = u'2026, distributed_tracking developers'
author = u'distributed_tracking developers'
version = u'1.0'
release = u'1.0'

# -- General configuration ---------------------------------------------
extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]
autodoc_member_order = 'bysource'

master_doc = 'index'
source_suffix = '.rst'

# -- Options for HTML output -------------------------------------------
html_theme = 'sphinx_rtd_theme'
