# -*- coding: utf-8 -*-
#
# polydisc-dilation documentation build configuration file.
#
# Only the settings that differ from the sphinx-quickstart defaults are kept.

import os
import sys

# make `src` and `config` importable for autodoc
sys.path.insert(0, os.path.abspath('..'))

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.mathjax']
templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'polydisc-dilation'
version = '0.1'
release = '0.1'

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# autodoc imports the modules; keep their loggers quiet and their outputs local
os.environ.setdefault('POLYDISC_LOG_DIR', os.path.join('_build', 'logs'))
autodoc_member_order = 'bysource'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'polydisc-dilationdoc'

# -- Options for LaTeX / manual page output ------------------------------------

latex_documents = [
    ('index',
     'polydisc-dilation.tex',
     u'polydisc-dilation Documentation',
     u"santosh soni", 'manual'),
]

man_pages = [
    ('index', 'polydisc', u'polydisc command line',
     [u"santosh soni"], 1)
]
