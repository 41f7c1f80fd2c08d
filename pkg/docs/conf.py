# -*- coding: utf-8 -*-
#
# pyatsh documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

import sphinx_bootstrap_theme

sys.path.insert(0, os.path.abspath('..'))

import pyatsh

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.viewcode',  # This will add links to source code to autodoc
    'sphinx.ext.napoleon',
    'sphinx.ext.imgmath',
    'sphinx.ext.intersphinx'
]

intersphinx_mapping = {'numpy': ('https://numpy.org/doc/stable/', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy/', None),
                       'pandas': ('https://pandas.pydata.org/docs/', None)}

# generate autosummary pages
autosummary_generate = True
autoclass_content = 'both'

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# General information about the project.
project = 'pyatsh'
copyright = '2026, the pyatsh developers'
author = 'the pyatsh developers'

version = pyatsh.__version__
release = pyatsh.__version__

language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# -- Options for HTML output ----------------------------------------------

html_theme = 'bootstrap'
html_theme_options = {
    'source_link_position': "footer",
    'bootswatch_theme': "paper",
    'navbar_sidebarrel': False,
    'bootstrap_version': "3",
    'navbar_links': [
                     ("Install", "source/install"),
                     ("Command line", "source/cli"),
                     ("API", "source/api"),
                     ],
    }
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()
htmlhelp_basename = 'pyatshdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'pyatsh', 'pyatsh Documentation',
     [author], 1)
]
