import io

from setuptools import setup


with io.open("README.md", encoding="utf-8") as readme:
    long_description = readme.read()

VERSION_TEMPLATE = """\
# file generated by setuptools_scm
# don't change, don't track in version control
version = {version!r}
"""

setup(name="hcinduce",
      use_scm_version={
          "write_to": "python/hcinduce/_version.py",
          "write_to_template": VERSION_TEMPLATE,
      },
      description="Class hierarchy induction and hierarchical classification "
                  "benchmarks for flat-labeled data",
      long_description=long_description,
      long_description_content_type='text/markdown',
      license='Apache License, Version 2.0',
      package_dir={'': 'python'},
      packages=['hcinduce'],
      entry_points={
          'console_scripts': [
              "hcinduce = hcinduce.__main__:main",
          ],
      },
      setup_requires=["setuptools_scm"],
      python_requires=">=3.8",
      install_requires=[
          'numpy>=1.20',
          'scipy>=1.6',
          'pandas>=1.5',
          'joblib>=1.0',
      ],
      extras_require={
          "testing": [
              "pytest >= 6.0",
              "pytest-cov >= 2.10",
              "pytest-xdist >= 2.0",
              "pytest-randomly >= 3.0",
              "hypothesis >= 5.0",
          ],
      },
      zip_safe=False,
      classifiers=[
          'Development Status :: 4 - Beta',
          'Environment :: Console',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: Apache Software License',
          'Natural Language :: English',
          'Operating System :: OS Independent',
          'Programming Language :: Python',
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering :: Artificial Intelligence',
      ],
      )
