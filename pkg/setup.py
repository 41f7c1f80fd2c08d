from setuptools import setup, find_packages
import re


VERSIONFILE = "pyatsh/__init__.py"
verstrline = open(VERSIONFILE, "rt").read()
VSRE = r"^__version__ = ['\"]([^'\"]*)['\"]"
mo = re.search(VSRE, verstrline, re.M)
if mo:
    verstr = mo.group(1)
else:
    raise RuntimeError("Unable to find version string in %s." % (VERSIONFILE,))

with open('requirements.txt') as f:
    requirements = f.read().splitlines()
    requirements = [l for l in requirements if l.strip() and not l.startswith('#')]

setup(
    name='pyatsh',
    version=verstr,
    packages=find_packages(),
    license='GNU GPL V3',
    description='Adapted two-step hybrid methods for perturbed oscillators',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    keywords='ODE oscillator two-step hybrid phase-lag trigonometric fitting',
    classifiers=[
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',

        'License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    install_requires=requirements,
    extras_require={'plot': ['matplotlib>=3.3'],
                    'test': ['pytest>=6.0']},
    entry_points={'console_scripts': ['pyatsh = pyatsh.cli:main']},
    python_requires='>=3.8',
    zip_safe=False
)
