#!/usr/bin/env python

from setuptools import setup

version = '0.1.0'

install_requires = [
    "numpy >= 1.20.0",
    "scipy >= 1.7.0",
]

extras_require = {
    "test": ["pytest >= 7.0", "hypothesis >= 6.0"],
}


setup(
    name='quantchar',
    version=version,
    description='L^p quantization error functions as characterization tools for probability measures',
    license='MIT',
    packages=["quantchar"],
    package_dir={'quantchar': 'quantchar'},
    entry_points={
        'console_scripts': [
            'quantchar=quantchar:run'
        ],
    },
    python_requires='>=3.8',
    install_requires=install_requires,
    extras_require=extras_require,
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
