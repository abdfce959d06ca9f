package org.eclipse.webdav.client;

import java.net.URL;
import java.util.Collection;
import java.util.HashSet;
import java.util.Hashtable;

public abstract class AbstractResourceHandle {
    protected Locator locator;

    public PropertyStatus getProperty(QualifiedName propertyName) throws DAVException {
        Collection names = new HashSet();
        names.add(propertyName);
        URLTable result = getProperties(names, IContext.DEPTH_ZERO);
        URL url = null;
        try {
            url = new URL(locator.getResourceURL());
        } catch (MalformedURLException e) {
            throw new SystemException(e);
        }
        Hashtable propTable = (Hashtable) result.get(url);
        if (propTable == null)
            throw new DAVException(Policy.bind("exception.lookup", url.toExternalForm()));
        return (PropertyStatus) propTable.get(propertyName);
    }

    public abstract URLTable getProperties(Collection names, String depth) throws DAVException;
}
